#include "arblens/detector.hpp"
#include "arblens/error.hpp"
#include "arblens/simulator.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

using namespace arblens;
using namespace arblens::literals;

namespace {

using Legs = std::vector<std::int64_t>;

ScenarioSpec scenario(std::uint64_t seed, bool decoys) {
    ScenarioSpec s;
    s.seed = seed;
    s.duration_ms = 1'200'000;
    s.fair_values = {{"BTC", 10000_d}, {"ETH", 200_d}, {"BNB", 20_d}, {"LTC", 60_d},
                     {"XRP", "0.3"_d}, {"TRX", "0.02"_d}, {"USDT", 1_d}, {"ADA", "0.05"_d}};
    std::vector<std::string> coins;
    for (const auto& [c, _] : s.fair_values) coins.push_back(c);
    s.universe = full_universe(coins, s.fair_values);
    auto add = [&](AgentKind k, const char* id, std::size_t n) {
        AgentSpec a;
        a.kind = k;
        a.id = id;
        a.count = n;
        a.latency.max = 50;
        a.full_exit_share = 0.4;
        s.agents.push_back(a);
    };
    add(AgentKind::Noise, "noise", 600);
    add(AgentKind::Triangular, "tri", 10);
    add(AgentKind::Indirect, "ind", 10);
    add(AgentKind::Competing, "comp", 8);
    if (decoys) add(AgentKind::Decoy, "decoy", 6);
    return s;
}

struct SimRun {
    ScenarioSpec spec;
    ScenarioResult sim;
    TradeStream trades;
    BookStream books;

    explicit SimRun(ScenarioSpec s)
        : spec(std::move(s)), sim(run_scenario(spec)), trades(spec.universe, plain(sim)), books(sim.snapshots, {}) {}

    static std::vector<Trade> plain(const ScenarioResult& r) {
        std::vector<Trade> out;
        for (const auto& t : r.trades) out.push_back(t.trade);
        return out;
    }
    [[nodiscard]] Detector detector(DetectorConfig cfg = {}) const {
        return Detector(trades, books, FeeSchedule::constant(spec.fees), cfg);
    }
    [[nodiscard]] std::set<Legs> labelled(LabelKind k) const {
        std::set<Legs> out;
        for (const auto& l : sim.labels) {
            if (l.kind == k) out.insert(l.trade_ids);
        }
        return out;
    }
};

std::set<Legs> detected(const DetectionResult& r, SequenceKind k) {
    std::set<Legs> out;
    for (const auto& s : r.sequences) {
        if (s.kind == k) out.insert(s.legs);
    }
    return out;
}

class DetectorOnScenarios : public ::testing::TestWithParam<std::uint64_t> {};

}  // namespace

TEST_P(DetectorOnScenarios, RecoversEveryPlantedSequence) {
    const SimRun run(scenario(GetParam(), false));
    const auto result = run.detector().run();
    EXPECT_EQ(detected(result, SequenceKind::Triangular), run.labelled(LabelKind::Triangular));
    EXPECT_EQ(detected(result, SequenceKind::Indirect), run.labelled(LabelKind::Indirect));
}

TEST_P(DetectorOnScenarios, ProfitabilityMatchesPlantedReturn) {
    const SimRun run(scenario(GetParam(), false));
    const auto result = run.detector().run();
    std::map<Legs, Decimal> planted;
    for (const auto& l : run.sim.labels) {
        if (l.kind == LabelKind::Triangular || l.kind == LabelKind::Indirect) planted[l.trade_ids] = *l.planted_bps;
    }
    std::size_t checked = 0;
    for (const auto& s : result.sequences) {
        auto it = planted.find(s.legs);
        if (it == planted.end()) continue;
        ASSERT_TRUE(s.profitability_bps) << s.to_json().dump();
        EXPECT_NEAR(s.profitability_bps->to_double(), it->second.to_double(), 1e-6);
        ++checked;
    }
    EXPECT_EQ(checked, planted.size());
}

TEST_P(DetectorOnScenarios, RecoversCompetitionAndExits) {
    const SimRun run(scenario(GetParam(), false));
    const auto result = run.detector().run();
    std::set<Legs> winners, full, partial;
    for (const auto& c : result.clusters) {
        for (const auto& m : c.members) {
            if (m.role == MemberRole::Winner && c.members.size() > 1) winners.insert(m.legs);
            if (m.exit.kind == ExitKind::FullExit) full.insert({m.legs[0], m.exit.exits[0]});
            if (m.exit.kind == ExitKind::PartialExit) {
                Legs l{m.legs[0]};
                l.insert(l.end(), m.exit.exits.begin(), m.exit.exits.end());
                partial.insert(l);
            }
        }
    }
    ASSERT_EQ(run.labelled(LabelKind::CompetingWinner).size(), 8u);
    ASSERT_FALSE(run.labelled(LabelKind::FullExit).empty());
    ASSERT_FALSE(run.labelled(LabelKind::PartialExit).empty());
    EXPECT_EQ(winners, run.labelled(LabelKind::CompetingWinner));
    EXPECT_EQ(full, run.labelled(LabelKind::FullExit));
    EXPECT_EQ(partial, run.labelled(LabelKind::PartialExit));

    // Realized partial-exit returns agree with the planted ones.
    std::map<Legs, Decimal> planted;
    for (const auto& l : run.sim.labels) {
        if (l.kind == LabelKind::PartialExit) planted[l.trade_ids] = *l.planted_bps;
    }
    for (const auto& c : result.clusters) {
        for (const auto& m : c.members) {
            if (m.exit.kind != ExitKind::PartialExit) continue;
            Legs l{m.legs[0]};
            l.insert(l.end(), m.exit.exits.begin(), m.exit.exits.end());
            ASSERT_TRUE(m.exit.realized_bps);
            EXPECT_NEAR(m.exit.realized_bps->to_double(), planted.at(l).to_double(), 1e-6);
        }
    }
}

TEST_P(DetectorOnScenarios, DecoysStayUndetected) {
    const SimRun run(scenario(GetParam(), true));
    const auto result = run.detector().run();
    std::set<std::int64_t> decoy_ids;
    for (const auto& l : run.sim.labels) {
        if (l.kind == LabelKind::Noise && l.agent == "decoy") decoy_ids.insert(l.trade_ids.begin(), l.trade_ids.end());
    }
    ASSERT_FALSE(decoy_ids.empty());
    for (const auto& s : result.sequences) {
        for (auto id : s.legs) EXPECT_FALSE(decoy_ids.count(id)) << s.to_json().dump();
    }
}

TEST_P(DetectorOnScenarios, WiderDeltaTNeverDropsASequence) {
    const SimRun run(scenario(GetParam(), true));
    std::set<Legs> previous;
    for (TimestampMs dt : {10, 20, 35, 50, 80, 120}) {
        DetectorConfig cfg;
        cfg.delta_t = dt;
        const auto r = run.detector(cfg).run();
        std::set<Legs> now = detected(r, SequenceKind::Triangular);
        for (const auto& l : detected(r, SequenceKind::Indirect)) now.insert(l);
        for (const auto& l : previous) {
            EXPECT_TRUE(now.count(l) || std::any_of(now.begin(), now.end(), [&](const Legs& n) {
                            return std::includes(n.begin(), n.end(), l.begin(), l.end());
                        }))
                << "delta_t " << dt << " lost a sequence starting at trade " << l.front();
        }
        previous = std::move(now);
    }
}

TEST_P(DetectorOnScenarios, NoTradeInTwoSequences) {
    const SimRun run(scenario(GetParam(), true));
    DetectorConfig wide;
    wide.delta_t = 120;
    for (const auto& cfg : {DetectorConfig{}, wide}) {
        std::set<std::int64_t> seen;
        for (const auto& s : run.detector(cfg).run().sequences) {
            for (std::size_t i = 0; i < s.legs.size(); ++i) {
                EXPECT_TRUE(seen.insert(s.legs[i]).second) << "trade " << s.legs[i];
                if (i > 0) {
                    EXPECT_LT(s.legs[i - 1], s.legs[i]);
                    EXPECT_LE(s.latencies[i - 1], cfg.delta_t);
                }
            }
        }
    }
}

TEST_P(DetectorOnScenarios, ThreadCountDoesNotChangeOutput) {
    const SimRun run(scenario(GetParam(), true));
    const auto d = run.detector();
    const auto one = detections_jsonl(d.run(1), "x", d.config());
    EXPECT_EQ(detections_jsonl(d.run(4), "x", d.config()), one);
    // Detecting the passes separately over the whole log agrees with the sharded run.
    std::set<Legs> tri;
    for (const auto& s : d.detect_triangular()) tri.insert(s.legs);
    EXPECT_EQ(tri, detected(d.run(3), SequenceKind::Triangular));
    std::set<Legs> ind;
    for (const auto& s : d.detect_indirect()) ind.insert(s.legs);
    EXPECT_EQ(ind, detected(d.run(2), SequenceKind::Indirect));
}

TEST_P(DetectorOnScenarios, DetectionsFileRoundTrips) {
    const SimRun run(scenario(GetParam(), true));
    const auto d = run.detector();
    const auto text = detections_jsonl(d.run(), "abc", d.config());
    std::istringstream in(text);
    const auto back = read_detections(in);
    EXPECT_EQ(back.trades_digest, "abc");
    EXPECT_EQ(detections_jsonl(back.result, back.trades_digest, back.config), text);
}

TEST(DetectionsFile, RejectsMalformedInput) {
    std::istringstream empty("");
    EXPECT_THROW((void)read_detections(empty), Error);
    std::istringstream no_header(R"({"type":"sequence"})");
    EXPECT_THROW((void)read_detections(no_header), Error);
    std::istringstream bad(R"({"type":"header","schema":"arblens.detection/1","trades_digest":"x","config":{}})"
                           "\n{\"type\":\"sequence\",\"kind\":\"SIDEWAYS\"}\n");
    try {
        (void)read_detections(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Parse);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, DetectorOnScenarios, ::testing::Values(1u, 7u, 2024u));
