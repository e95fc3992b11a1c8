#include "arblens/validation.hpp"

#include "arblens/error.hpp"

#include <algorithm>
#include <array>
#include <iomanip>
#include <sstream>

namespace arblens {

namespace {

constexpr std::array kScored{LabelKind::Triangular, LabelKind::Indirect, LabelKind::CompetingWinner,
                             LabelKind::FullExit, LabelKind::PartialExit};

std::string name(LabelKind k) { return std::string(label_kind_name(k)); }

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

std::optional<double> KindScore::precision() const {
    const auto d = true_positives + false_positives;
    if (d == 0) return std::nullopt;
    return static_cast<double>(true_positives) / d;
}

std::optional<double> KindScore::recall() const {
    const auto d = true_positives + false_negatives;
    if (d == 0) return std::nullopt;
    return static_cast<double>(true_positives) / d;
}

nlohmann::json KindScore::to_json() const {
    return {{"true_positives", true_positives},
            {"false_positives", false_positives},
            {"false_negatives", false_negatives},
            {"precision", opt(precision())},
            {"recall", opt(recall())}};
}

std::map<std::string, std::set<TradeSet>> detected_items(const DetectionResult& d) {
    std::map<std::string, std::set<TradeSet>> out;
    for (auto k : kScored) out[name(k)];
    for (const auto& s : d.sequences) {
        out[name(s.kind == SequenceKind::Triangular ? LabelKind::Triangular : LabelKind::Indirect)].insert(s.legs);
    }
    for (const auto& c : d.clusters) {
        for (const auto& m : c.members) {
            if (m.role == MemberRole::Winner && c.members.size() > 1) out[name(LabelKind::CompetingWinner)].insert(m.legs);
            if (m.exit.kind == ExitKind::None) continue;
            TradeSet items{m.legs.front()};
            items.insert(items.end(), m.exit.exits.begin(), m.exit.exits.end());
            out[name(m.exit.kind == ExitKind::FullExit ? LabelKind::FullExit : LabelKind::PartialExit)].insert(items);
        }
    }
    return out;
}

std::map<std::string, std::set<TradeSet>> planted_items(const std::vector<GroundTruthLabel>& labels) {
    std::map<std::string, std::set<TradeSet>> out;
    for (auto k : kScored) out[name(k)];
    for (const auto& l : labels) {
        if (std::find(kScored.begin(), kScored.end(), l.kind) != kScored.end()) out[name(l.kind)].insert(l.trade_ids);
    }
    return out;
}

ValidationReport validate_detections(const std::vector<GroundTruthLabel>& labels, const DetectionResult& detections) {
    const auto found = detected_items(detections);
    const auto planted = planted_items(labels);
    ValidationReport r;
    for (const auto& [kind, want] : planted) {
        const auto& got = found.at(kind);
        KindScore& s = r.kinds[kind];
        for (const auto& item : got) (want.count(item) ? s.true_positives : s.false_positives)++;
        for (const auto& item : want) {
            if (!got.count(item)) ++s.false_negatives;
        }
    }

    std::map<TradeSet, std::string> label_of;
    std::set<std::int64_t> decoy_trades;
    for (const auto& l : labels) {
        label_of.emplace(l.trade_ids, name(l.kind));
        if (l.kind == LabelKind::Noise && l.agent == "decoy") decoy_trades.insert(l.trade_ids.begin(), l.trade_ids.end());
    }
    for (const auto& [kind, items] : found) {
        auto& row = r.confusion[kind];
        for (const auto& item : items) {
            auto it = label_of.find(item);
            ++row[it == label_of.end() ? "UNLABELLED" : it->second];
        }
    }
    for (const auto& s : detections.sequences) {
        if (std::any_of(s.legs.begin(), s.legs.end(), [&](auto id) { return decoy_trades.count(id) > 0; })) {
            ++r.decoy_hits;
        }
    }
    return r;
}

ValidationReport validate_detections(const LabelLog& labels, const DetectionFile& detections) {
    if (!labels.trades_digest.empty() && !detections.trades_digest.empty() &&
        labels.trades_digest != detections.trades_digest) {
        throw Error(Errc::Consistency, "labels and detections come from different trade logs (" +
                                           labels.trades_digest + " vs " + detections.trades_digest + ")");
    }
    return validate_detections(labels.labels, detections.result);
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json k = nlohmann::json::object();
    for (const auto& [kind, s] : kinds) k[kind] = s.to_json();
    return {{"kinds", k}, {"confusion", confusion}, {"decoy_hits", decoy_hits}};
}

void write_validation_table(std::ostream& out, const ValidationReport& report) {
    auto cell = [](const std::optional<double>& v) {
        std::ostringstream s;
        if (v) {
            s << std::fixed << std::setprecision(4) << *v;
        } else {
            s << "n/a";
        }
        return s.str();
    };
    out << std::left << std::setw(18) << "kind" << std::right << std::setw(8) << "tp" << std::setw(8) << "fp"
        << std::setw(8) << "fn" << std::setw(11) << "precision" << std::setw(9) << "recall" << "\n";
    for (const auto& [kind, s] : report.kinds) {
        out << std::left << std::setw(18) << kind << std::right << std::setw(8) << s.true_positives << std::setw(8)
            << s.false_positives << std::setw(8) << s.false_negatives << std::setw(11) << cell(s.precision())
            << std::setw(9) << cell(s.recall()) << "\n";
    }
    out << "decoy hits: " << report.decoy_hits << "\n";
}

}  // namespace arblens
