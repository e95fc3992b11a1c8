#include "arblens/detector.hpp"
#include "arblens/error.hpp"

#include <fstream>

namespace arblens {

namespace {

template <typename E, std::size_t N>
E enum_from(const std::string& s, const std::array<E, N>& all, std::string_view (*name)(E), const char* what) {
    for (E e : all) {
        if (name(e) == s) return e;
    }
    throw Error(Errc::Parse, std::string("unknown ") + what + " '" + s + "'");
}

std::vector<Decimal> decimals(const nlohmann::json& j) {
    std::vector<Decimal> out;
    for (const auto& v : j) out.push_back(Decimal::parse(v.get<std::string>()));
    return out;
}

std::optional<Decimal> optional_decimal(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return Decimal::parse(j.get<std::string>());
}

DetectedSequence sequence_from(const nlohmann::json& j) {
    DetectedSequence s;
    s.kind = enum_from(j.at("kind").get<std::string>(),
                       std::array{SequenceKind::Triangular, SequenceKind::Indirect}, sequence_kind_name, "kind");
    s.legs = j.at("legs").get<std::vector<std::int64_t>>();
    s.coins = j.at("coins").get<std::vector<std::string>>();
    s.quantities = decimals(j.at("quantities"));
    s.prices = decimals(j.at("prices"));
    s.latencies = j.at("latencies_ms").get<std::vector<TimestampMs>>();
    s.profitability_bps = optional_decimal(j.at("profitability_bps"));
    s.reference = enum_from(j.at("reference").get<std::string>(),
                            std::array{PriceSource::BookTop, PriceSource::Vwap, PriceSource::Unavailable},
                            price_source_name, "price source");
    if (s.legs.size() < 2 || s.coins.size() != 3 || s.latencies.size() + 1 != s.legs.size()) {
        throw Error(Errc::Parse, "malformed sequence");
    }
    return s;
}

ExitClassification exit_from(const nlohmann::json& j) {
    ExitClassification e;
    e.kind = enum_from(j.at("kind").get<std::string>(),
                       std::array{ExitKind::None, ExitKind::FullExit, ExitKind::PartialExit}, exit_kind_name, "exit");
    e.exits = j.at("exits").get<std::vector<std::int64_t>>();
    e.coin_count = j.at("coin_count").get<std::size_t>();
    e.realized_bps = optional_decimal(j.at("realized_bps"));
    e.other_targets = j.value("other_targets", false);
    e.truncated = j.value("truncated", false);
    return e;
}

CompetitionCluster cluster_from(const nlohmann::json& j) {
    CompetitionCluster c;
    c.id = j.at("id").get<std::int64_t>();
    c.c2 = j.at("c2").get<std::string>();
    c.c3 = j.at("c3").get<std::string>();
    for (const auto& mj : j.at("members")) {
        ClusterMember m;
        m.legs = mj.at("legs").get<std::vector<std::int64_t>>();
        m.from = mj.at("from").get<std::string>();
        m.q1 = Decimal::parse(mj.at("q1").get<std::string>());
        m.profitability_bps = optional_decimal(mj.at("profitability_bps"));
        m.role = enum_from(mj.at("role").get<std::string>(),
                           std::array{MemberRole::Winner, MemberRole::Loser, MemberRole::Undetermined},
                           member_role_name, "role");
        m.capacity_exhausted = mj.at("capacity_exhausted").get<bool>();
        m.exit = exit_from(mj.at("exit"));
        c.members.push_back(std::move(m));
    }
    return c;
}

}  // namespace

DetectionFile read_detections(std::istream& in) {
    DetectionFile f;
    bool header = false;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const auto type = j.at("type").get<std::string>();
            if (!header) {
                if (type != "header" || j.at("schema") != "arblens.detection/1") {
                    throw Error(Errc::Parse, "expected an arblens.detection/1 header");
                }
                f.trades_digest = j.at("trades_digest").get<std::string>();
                f.config = DetectorConfig::from_json(j.at("config"));
                header = true;
            } else if (type == "sequence") {
                f.result.sequences.push_back(sequence_from(j));
            } else if (type == "cluster") {
                f.result.clusters.push_back(cluster_from(j));
            } else if (type == "diagnostic") {
                f.result.diagnostics.push_back(j.at("message").get<std::string>());
            } else {
                throw Error(Errc::Parse, "unknown record type '" + type + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::Parse, "detections line " + std::to_string(n) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.code(), "detections line " + std::to_string(n) + ": " + e.what());
        }
    }
    if (!header) throw Error(Errc::Parse, "detections file has no header");
    return f;
}

DetectionFile load_detections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    return read_detections(in);
}

}  // namespace arblens
