#include "arblens/error.hpp"
#include "arblens/json_io.hpp"
#include "arblens/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace arblens {

namespace {

const std::map<std::string, std::string>& known_values() {
    static const std::map<std::string, std::string> v{
        {"BTC", "10000"}, {"ETH", "200"}, {"BNB", "20"},  {"LTC", "60"},  {"XRP", "0.3"},  {"TRX", "0.02"},
        {"USDT", "1"},    {"USDC", "1"},  {"TUSD", "1"},  {"PAX", "1"},   {"BUSD", "1"},   {"USDS", "1"},
    };
    return v;
}

[[noreturn]] void config_error(const std::string& what) { throw Error(Errc::ScenarioConfig, what); }

AgentKind parse_agent_kind(const std::string& s) {
    for (auto k : {AgentKind::Noise, AgentKind::Triangular, AgentKind::Indirect, AgentKind::Competing,
                   AgentKind::Decoy}) {
        if (agent_kind_name(k) == s) return k;
    }
    config_error("unknown agent kind '" + s + "'");
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        config_error(std::string("bad value for '") + key + "'");
    }
}

Decimal decimal_or(const nlohmann::json& j, const char* key, Decimal fallback, const std::string& ctx) {
    return j.contains(key) ? json_decimal(j, key, ctx) : fallback;
}

AgentSpec parse_agent(const nlohmann::json& j, std::size_t index) {
    if (!j.is_object()) config_error("agent " + std::to_string(index) + " is not an object");
    const std::string ctx = "agent " + std::to_string(index);
    AgentSpec a;
    a.kind = parse_agent_kind(get_or<std::string>(j, "kind", ""));
    a.id = get_or<std::string>(j, "id", std::string(agent_kind_name(a.kind)) + "-" + std::to_string(index));
    a.count = get_or<std::size_t>(j, "count", 0);
    if (auto it = j.find("latency"); it != j.end()) {
        a.latency.mean = get_or<double>(*it, "mean", a.latency.mean);
        a.latency.stdev = get_or<double>(*it, "stdev", a.latency.stdev);
        a.latency.min = get_or<double>(*it, "min", a.latency.min);
        a.latency.max = get_or<double>(*it, "max", a.latency.max);
    }
    if (auto it = j.find("bps"); it != j.end()) {
        a.bps.mean = decimal_or(*it, "mean", a.bps.mean, ctx);
        a.bps.spread = decimal_or(*it, "spread", a.bps.spread, ctx);
    }
    if (auto it = j.find("size"); it != j.end()) {
        a.size.min_value = decimal_or(*it, "min_value", a.size.min_value, ctx);
        a.size.max_value = decimal_or(*it, "max_value", a.size.max_value, ctx);
        a.size.bps_correlation = get_or<double>(*it, "bps_correlation", 0.0);
    }
    a.base_coins = get_or<std::vector<std::string>>(j, "base_coins", {});
    a.min_competitors = get_or<std::size_t>(j, "min_competitors", a.min_competitors);
    a.max_competitors = get_or<std::size_t>(j, "max_competitors", a.max_competitors);
    a.full_exit_share = get_or<double>(j, "full_exit_share", a.full_exit_share);
    a.min_exit_coins = get_or<std::size_t>(j, "min_exit_coins", a.min_exit_coins);
    a.max_exit_coins = get_or<std::size_t>(j, "max_exit_coins", a.max_exit_coins);
    return a;
}

}  // namespace

TimestampMs LatencyModel::sample(std::mt19937_64& rng) const {
    std::normal_distribution<double> dist(mean, stdev);
    const double lo = std::ceil(min);
    const double hi = std::floor(max);
    for (int attempt = 0; attempt < 10'000; ++attempt) {
        const double v = std::round(stdev > 0 ? dist(rng) : mean);
        if (v >= lo && v <= hi) return static_cast<TimestampMs>(v);
    }
    return static_cast<TimestampMs>(std::clamp(std::round(mean), lo, hi));
}

std::string_view agent_kind_name(AgentKind k) {
    switch (k) {
        case AgentKind::Noise: return "noise";
        case AgentKind::Triangular: return "triangular";
        case AgentKind::Indirect: return "indirect";
        case AgentKind::Competing: return "competing";
        case AgentKind::Decoy: return "decoy";
    }
    return "noise";
}

Universe full_universe(const std::vector<std::string>& coins, const std::map<std::string, Decimal>& values) {
    std::vector<PairListing> listings;
    for (std::size_t i = 0; i < coins.size(); ++i) {
        for (std::size_t j = i + 1; j < coins.size(); ++j) {
            std::string a = coins[i];
            std::string b = coins[j];
            const Decimal va = values.at(a);
            const Decimal vb = values.at(b);
            if (va < vb || (va == vb && b < a)) std::swap(a, b);
            PairListing l;
            l.symbol = a + b;
            l.base = {a, default_anchor_class(a)};
            l.quote = {b, default_anchor_class(b)};
            l.qty_increment = Decimal::parse("0.00001");
            l.min_qty = l.qty_increment;
            l.max_qty = Decimal(100'000'000);
            l.price_increment = Decimal::parse("0.00000001");
            l.min_price = l.price_increment;
            l.max_price = Decimal(100'000'000);
            listings.push_back(std::move(l));
        }
    }
    return Universe(std::move(listings));
}

ScenarioSpec ScenarioSpec::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) config_error("scenario must be a JSON object");
    ScenarioSpec s;
    s.seed = get_or<std::uint64_t>(doc, "seed", 1);
    s.duration_ms = get_or<TimestampMs>(doc, "duration_ms", s.duration_ms);
    s.snapshot_cadence_ms = get_or<TimestampMs>(doc, "snapshot_cadence_ms", s.snapshot_cadence_ms);
    s.mm_half_spread = decimal_or(doc, "mm_half_spread", s.mm_half_spread, "scenario");

    if (auto it = doc.find("values"); it != doc.end()) {
        if (!it->is_object()) config_error("'values' must map coins to numbers");
        for (auto& [coin, _] : it->items()) s.fair_values[coin] = json_decimal(*it, coin.c_str(), "values");
    }
    if (doc.contains("universe")) {
        s.universe = Universe::from_json(doc.at("universe"));
        for (const auto& c : s.universe.coins()) {
            if (!s.fair_values.count(c.symbol)) config_error("no fair value for " + c.symbol);
        }
    } else if (doc.contains("coins")) {
        auto coins = get_or<std::vector<std::string>>(doc, "coins", {});
        std::mt19937_64 rng(s.seed ^ 0x5eedf00dULL);
        std::uniform_real_distribution<double> log_value(std::log(0.05), std::log(500.0));
        for (const auto& c : coins) {
            if (s.fair_values.count(c)) continue;
            auto known = known_values().find(c);
            s.fair_values[c] = known != known_values().end()
                                   ? Decimal::parse(known->second)
                                   : max(Decimal::from_double(std::exp(log_value(rng))).round_to(4, Rounding::HalfEven),
                                         Decimal::parse("0.0001"));
        }
        s.universe = full_universe(coins, s.fair_values);
    }

    if (auto it = doc.find("fees"); it != doc.end()) {
        s.fees.maker_bps = decimal_or(*it, "maker_bps", s.fees.maker_bps, "fees");
        s.fees.taker_bps = decimal_or(*it, "taker_bps", s.fees.taker_bps, "fees");
        s.fees.bnb_flat = decimal_or(*it, "f", s.fees.bnb_flat, "fees");
        s.fees.pay_in_bnb = get_or<bool>(*it, "pay_in_bnb", true);
    }
    if (auto it = doc.find("agents"); it != doc.end()) {
        if (!it->is_array()) config_error("'agents' must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) s.agents.push_back(parse_agent((*it)[i], i));
    }
    s.validate();
    return s;
}

ScenarioSpec ScenarioSpec::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::Parse, path.string() + ": " + e.what());
    }
}

nlohmann::json ScenarioSpec::to_json() const {
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [c, v] : fair_values) values[c] = v.to_string();
    nlohmann::json agents_json = nlohmann::json::array();
    for (const auto& a : agents) {
        agents_json.push_back({
            {"kind", agent_kind_name(a.kind)},
            {"id", a.id},
            {"count", a.count},
            {"latency", {{"mean", a.latency.mean}, {"stdev", a.latency.stdev}, {"min", a.latency.min},
                         {"max", a.latency.max}}},
            {"bps", {{"mean", a.bps.mean.to_string()}, {"spread", a.bps.spread.to_string()}}},
            {"size", {{"min_value", a.size.min_value.to_string()}, {"max_value", a.size.max_value.to_string()},
                      {"bps_correlation", a.size.bps_correlation}}},
            {"base_coins", a.base_coins},
            {"min_competitors", a.min_competitors},
            {"max_competitors", a.max_competitors},
            {"full_exit_share", a.full_exit_share},
            {"min_exit_coins", a.min_exit_coins},
            {"max_exit_coins", a.max_exit_coins},
        });
    }
    return {
        {"seed", seed},
        {"duration_ms", duration_ms},
        {"snapshot_cadence_ms", snapshot_cadence_ms},
        {"mm_half_spread", mm_half_spread.to_string()},
        {"universe", universe.to_json()},
        {"values", values},
        {"fees", {{"maker_bps", fees.maker_bps.to_string()}, {"taker_bps", fees.taker_bps.to_string()},
                  {"f", fees.bnb_flat.to_string()}, {"pay_in_bnb", fees.pay_in_bnb}}},
        {"agents", agents_json},
    };
}

void ScenarioSpec::validate() const {
    if (duration_ms <= 0) config_error("duration_ms must be > 0");
    if (snapshot_cadence_ms <= 0) config_error("snapshot_cadence_ms must be > 0");
    if (!mm_half_spread.is_positive() || mm_half_spread >= Decimal(1)) config_error("mm_half_spread must be in (0, 1)");
    try {
        fees.validate();
    } catch (const Error& e) {
        config_error(e.what());
    }
    for (const auto& [coin, v] : fair_values) {
        if (!v.is_positive()) config_error("fair value of " + coin + " must be > 0");
    }
    std::set<std::string> ids;
    for (const auto& a : agents) {
        if (!ids.insert(a.id).second) config_error("duplicate agent id " + a.id);
        if (a.count > 0 && universe.size() == 0) config_error("agent " + a.id + " needs a non-empty universe");
        if (a.latency.min < 1 || a.latency.max < a.latency.min || a.latency.stdev < 0) {
            config_error("agent " + a.id + ": bad latency model");
        }
        if (a.size.min_value <= Decimal{} || a.size.max_value < a.size.min_value) {
            config_error("agent " + a.id + ": bad size model");
        }
        if (a.bps.spread.is_negative()) config_error("agent " + a.id + ": bps spread must be >= 0");
        if (a.size.bps_correlation < 0 || a.size.bps_correlation > 1) {
            config_error("agent " + a.id + ": bps_correlation must be in [0, 1]");
        }
        for (const auto& c : a.base_coins) {
            if (!universe.coin(c)) config_error("agent " + a.id + ": base coin " + c + " is not listed");
        }
        if (a.kind == AgentKind::Competing) {
            if (a.min_competitors < 2 || a.max_competitors < a.min_competitors) {
                config_error("agent " + a.id + ": competitors must be >= 2");
            }
            if (a.min_exit_coins < 2 || a.max_exit_coins < a.min_exit_coins) {
                config_error("agent " + a.id + ": partial exits need >= 2 coins");
            }
            if (a.full_exit_share < 0 || a.full_exit_share > 1) {
                config_error("agent " + a.id + ": full_exit_share must be in [0, 1]");
            }
        }
    }
}

std::string_view label_kind_name(LabelKind k) {
    switch (k) {
        case LabelKind::Triangular: return "TRIANGULAR";
        case LabelKind::Indirect: return "INDIRECT";
        case LabelKind::CompetingWinner: return "COMPETING_WINNER";
        case LabelKind::CompetingLoser: return "COMPETING_LOSER";
        case LabelKind::FullExit: return "FULL_EXIT";
        case LabelKind::PartialExit: return "PARTIAL_EXIT";
        case LabelKind::Noise: return "NOISE";
    }
    return "NOISE";
}

std::optional<LabelKind> parse_label_kind(std::string_view s) {
    for (auto k : {LabelKind::Triangular, LabelKind::Indirect, LabelKind::CompetingWinner, LabelKind::CompetingLoser,
                   LabelKind::FullExit, LabelKind::PartialExit, LabelKind::Noise}) {
        if (label_kind_name(k) == s) return k;
    }
    return std::nullopt;
}

nlohmann::json GroundTruthLabel::to_json() const {
    nlohmann::json j{{"kind", label_kind_name(kind)}, {"episode", episode}, {"agent", agent}, {"trade_ids", trade_ids}};
    j["planted_bps"] = planted_bps ? nlohmann::json(planted_bps->to_string()) : nlohmann::json(nullptr);
    if (quantity) j["quantity"] = quantity->to_string();
    if (!latencies.empty()) j["latencies_ms"] = latencies;
    return j;
}

GroundTruthLabel GroundTruthLabel::from_json(const nlohmann::json& j) {
    GroundTruthLabel l;
    try {
        auto kind = parse_label_kind(j.at("kind").get<std::string>());
        if (!kind) throw Error(Errc::Parse, "unknown label kind");
        l.kind = *kind;
        l.episode = j.value("episode", std::int64_t{0});
        l.agent = j.value("agent", std::string{});
        l.trade_ids = j.at("trade_ids").get<std::vector<std::int64_t>>();
        if (j.contains("planted_bps") && !j.at("planted_bps").is_null()) {
            l.planted_bps = json_decimal(j, "planted_bps", "label");
        }
        if (j.contains("quantity")) l.quantity = json_decimal(j, "quantity", "label");
        if (j.contains("latencies_ms")) l.latencies = j.at("latencies_ms").get<std::vector<TimestampMs>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::Parse, std::string("bad label: ") + e.what());
    }
    return l;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string trades_digest(const std::vector<Trade>& trades, const Universe& universe) {
    std::ostringstream out;
    write_trades_header(out);
    for (const auto& t : trades) write_trade(out, t, universe);
    return fnv1a_hex(out.str());
}

std::string trades_digest(const TradeStream& stream) { return trades_digest(stream.trades(), stream.universe()); }

ScenarioFiles write_scenario(const ScenarioSpec& spec, const ScenarioResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    ScenarioFiles files{dir / "trades.csv", dir / "books.csv", dir / "labels.jsonl", dir / "universe.json"};
    auto open = [](const std::filesystem::path& p) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error(Errc::Io, "cannot write " + p.string());
        return out;
    };

    std::vector<Trade> trades;
    trades.reserve(result.trades.size());
    for (const auto& t : result.trades) trades.push_back(t.trade);
    {
        std::ostringstream csv;
        write_trades_header(csv);
        for (const auto& t : trades) write_trade(csv, t, spec.universe);
        auto out = open(files.trades);
        out << csv.str();
    }
    {
        auto out = open(files.books);
        write_books_header(out);
        for (const auto& s : result.snapshots) write_snapshot(out, s, spec.universe);
    }
    {
        auto out = open(files.labels);
        nlohmann::json header{{"type", "header"},
                              {"schema", "arblens.labels/1"},
                              {"trades_digest", trades_digest(trades, spec.universe)},
                              {"seed", spec.seed}};
        out << header.dump() << '\n';
        for (const auto& l : result.labels) out << l.to_json().dump() << '\n';
    }
    {
        auto out = open(files.universe);
        nlohmann::json doc = spec.universe.to_json();
        out << doc.dump(2) << '\n';
    }
    return files;
}

LabelLog load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    LabelLog log;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(Errc::Parse, path.string() + " line " + std::to_string(n) + ": " + e.what());
        }
        if (j.value("type", std::string{}) == "header") {
            log.trades_digest = j.value("trades_digest", std::string{});
            continue;
        }
        log.labels.push_back(GroundTruthLabel::from_json(j));
    }
    return log;
}

}  // namespace arblens
