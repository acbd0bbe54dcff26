#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

namespace imaginenav {
namespace {

using testing::free_cells;
using testing::plan_from_ascii;

const WaypointModel& default_model() {
    static const WaypointModel model = build_model(ModelRecipe{}, kDefaultSamplingStep);
    return model;
}

View synthetic_view(const std::vector<std::string>& categories) {
    View v;
    v.rays.assign(64, Ray{5.0, std::nullopt, std::nullopt});
    for (std::size_t k = 0; k < categories.size(); ++k)
        v.rays[k * 4] = Ray{2.0, categories[k], static_cast<int>(k)};
    return v;
}

Candidate synthetic_candidate(int k, Vec2 at, const std::vector<std::string>& categories) {
    Candidate c;
    c.label = candidate_label(k);
    c.direction = k;
    c.waypoint = {at.x, at.y, 60.0 * k};
    c.imagined = synthetic_view(categories);
    return c;
}

// Independent recomputation of the heuristic score from its definition.
double brute_score(const Candidate& c, const std::string& target, const VisitGrid& visits, const FloorPlan& plan,
                   const RelatednessTable& table) {
    std::set<std::string> seen;
    for (const Ray& r : c.imagined.rays)
        if (r.category) seen.insert(*r.category);
    double visible = seen.count(target) ? 10.0 : 0.0;
    double lo = std::min(table.missing(), table.self_score()), hi = std::max(table.missing(), table.self_score());
    for (const auto& [k, v] : table.entries()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double rel = 0.0;
    for (const auto& cat : seen) rel = std::max(rel, (table.raw(cat, target) - lo) / (hi - lo));
    int total = 0, fresh = 0;
    for (std::size_t idx = 0; idx < plan.cells().size(); ++idx) {
        Cell cell = plan.cell_of_index(idx);
        if (distance(plan.cell_center(cell), position(c.waypoint)) <= 2.0 + 1e-9) {
            ++total;
            fresh += visits.count(cell) == 0;
        }
    }
    double novelty = total ? static_cast<double>(fresh) / total : 0.0;
    return visible + rel + 0.5 * novelty;
}

TEST(MakeCandidates, LabelsAreAThroughFInDirectionOrder) {
    FloorPlan p = generate_floorplan(12);
    Pose agent = testing::center_pose(p, free_cells(p)[300], 30.0);
    auto cands = make_candidates(p, agent, WaypointSource{&default_model(), 2.0}, {});
    ASSERT_EQ(cands.size(), 6u);
    std::set<std::string> labels;
    for (int k = 0; k < 6; ++k) {
        const Candidate& c = cands[static_cast<std::size_t>(k)];
        labels.insert(c.label);
        EXPECT_EQ(c.label, std::string(1, static_cast<char>('A' + k)));
        EXPECT_EQ(c.direction, k);
        EXPECT_TRUE(p.is_free(position(c.waypoint)));
        EXPECT_EQ(c.imagined.rays, render_view(p, c.waypoint).rays);
    }
    EXPECT_EQ(labels, (std::set<std::string>{"A", "B", "C", "D", "E", "F"}));
}

TEST(MakeCandidates, SymmetricRoomAndOutputGiveSixfoldSymmetry) {
    FloorPlan p = testing::open_room(40, 40);
    Pose agent{5.125, 5.125, 0.0};
    auto cands = make_candidates(p, agent, WaypointSource{nullptr, 2.0}, {});
    for (int k = 0; k < 6; ++k) {
        const Pose& w = cands[static_cast<std::size_t>(k)].waypoint;
        EXPECT_NEAR(distance(position(w), position(agent)), 2.0, 1e-9);
        EXPECT_NEAR(wrap_angle(rad2deg(std::atan2(w.y - agent.y, w.x - agent.x)) - 60.0 * k), 0.0, 1e-9);
        EXPECT_NEAR(w.heading, 60.0 * k, 1e-9);
    }
}

TEST(MakeCandidates, UnusableHopFallsBackToOneMeter) {
    // Facing east with the wall face 1.25 m ahead and a thick wall behind it.
    std::vector<std::string> rows(11, std::string(6, '.') + std::string(12, '#'));
    rows.front() = rows.back() = std::string(18, '#');
    for (auto& r : rows) r[0] = '#';
    FloorPlan p = plan_from_ascii(rows);
    Pose agent{0.125 + 0.125 + 0.125, 1.375, 0.0};
    ASSERT_TRUE(p.is_free(position(agent)));
    auto cands = make_candidates(p, agent, WaypointSource{nullptr, 2.0}, {});
    const Candidate& east = cands[0];
    EXPECT_TRUE(east.fallback);
    EXPECT_FALSE(east.stationary);
    EXPECT_NEAR(distance(position(east.waypoint), position(agent)), 1.0, 1e-9);
}

TEST(MakeCandidates, EnclosedAgentGetsStationaryCandidates) {
    FloorPlan p = plan_from_ascii({"#####", "#...#", "#...#", "#...#", "#####"});
    Pose agent = testing::center_pose(p, {2, 2}, 0.0);
    auto cands = make_candidates(p, agent, WaypointSource{nullptr, 2.0}, {});
    for (const auto& c : cands) {
        EXPECT_TRUE(c.stationary);
        EXPECT_EQ(c.waypoint, agent.rotated(60.0 * c.direction));
    }
    EXPECT_EQ(movable_candidates(cands).size(), 6u);
}

TEST(MovableCandidates, DropsOnlyStationaryOnes) {
    std::vector<Candidate> cands;
    for (int k = 0; k < 6; ++k) {
        cands.push_back(synthetic_candidate(k, {1, 1}, {}));
        cands.back().stationary = k % 2 == 0;
    }
    auto kept = movable_candidates(cands);
    ASSERT_EQ(kept.size(), 3u);
    EXPECT_EQ(kept[0].label, "B");
    EXPECT_EQ(kept[2].label, "F");
}

TEST(MakeCandidates, DeadEndPocketOffersAWaypointInTheExitCorridor) {
    // A 2 m pocket whose only exit is a 1 m wide corridor leading east.
    std::vector<std::string> rows;
    rows.push_back(std::string(40, '#'));
    for (int r = 0; r < 10; ++r) {
        std::string row = "#" + std::string(8, '.') + "#" + std::string(29, '#') + "#";
        if (r >= 3 && r <= 6) row = "#" + std::string(8, '.') + std::string(30, '.') + "#";
        rows.push_back(row);
    }
    rows.push_back(std::string(40, '#'));
    FloorPlan p = plan_from_ascii(rows);
    int probes = 0, ok = 0;
    for (int i = 2; i <= 7; ++i)
        for (int j = 2; j <= 9; j += 2)
            for (double h : {0.0, 45.0, 100.0, 200.0}) {
                Pose agent = testing::center_pose(p, {i, j}, h);
                auto cands = make_candidates(p, agent, WaypointSource{&default_model(), 2.0}, {});
                bool any = false;
                for (const auto& c : cands) any |= p.cell_at(position(c.waypoint)).i >= 10;
                ok += any;
                ++probes;
            }
    EXPECT_GE(ok * 10, probes * 8) << ok << " of " << probes;
}

TEST(ScoreHeuristic, VisibleTargetDominatesNovelty) {
    FloorPlan p = testing::open_room(60, 60);
    VisitGrid visits(p);
    std::vector<Candidate> cands;
    for (int k = 0; k < 6; ++k) cands.push_back(synthetic_candidate(k, {2.0 + 2.0 * k, 7.0}, {"couch"}));
    cands[4].imagined = synthetic_view({"tv"});
    visits.stamp(position(cands[4].waypoint), 3.0);  // no novelty left near the target view
    Decision d = score_heuristic(cands, "tv", visits);
    EXPECT_EQ(d.choice, "E");
    EXPECT_EQ(d.scorer_id, "heuristic");
}

TEST(ScoreHeuristic, AllEqualScoresPickA) {
    FloorPlan p = testing::open_room(60, 60);
    VisitGrid visits(p);
    std::vector<Candidate> cands;
    for (int k = 0; k < 6; ++k) cands.push_back(synthetic_candidate(k, {7.0, 7.0}, {"bed"}));
    EXPECT_EQ(score_heuristic(cands, "couch", visits).choice, "A");
    std::reverse(cands.begin(), cands.end());
    EXPECT_EQ(score_heuristic(cands, "couch", visits).choice, "A");
}

TEST(ScoreHeuristic, MatchesBruteForceOnRandomCandidateSets) {
    FloorPlan p = testing::open_room(48, 48);
    const auto palette = WorldSpec::defaults().palette();
    const RelatednessTable table = RelatednessTable::defaults();
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> pos(0.5, 11.5);
    for (int trial = 0; trial < 300; ++trial) {
        VisitGrid visits(p);
        for (int s = 0; s < 10; ++s) visits.stamp({pos(rng), pos(rng)});
        std::string target = palette[rng() % palette.size()];
        std::vector<Candidate> cands;
        for (int k = 0; k < 6; ++k) {
            std::vector<std::string> cats;
            int n = static_cast<int>(rng() % 4);
            for (int c = 0; c < n; ++c) {
                std::string cat = palette[rng() % palette.size()];
                if (cat == target && rng() % 3) continue;
                cats.push_back(cat);
            }
            cands.push_back(synthetic_candidate(k, {pos(rng), pos(rng)}, cats));
        }
        std::size_t best = 0;
        double best_s = -1.0;
        for (std::size_t k = 0; k < cands.size(); ++k) {
            double s = brute_score(cands[k], target, visits, p, table);
            if (s > best_s + 1e-9) {
                best_s = s;
                best = k;
            }
        }
        EXPECT_EQ(score_heuristic(cands, target, visits, table).choice, cands[best].label) << "trial " << trial;
    }
}

TEST(ScoreHeuristic, InvariantUnderAffineRescalingOfTheTable) {
    FloorPlan p = testing::open_room(48, 48);
    const auto palette = WorldSpec::defaults().palette();
    const RelatednessTable base = RelatednessTable::defaults();
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> pos(0.5, 11.5);
    for (auto [a, b] : {std::pair{0.5, 0.2}, std::pair{0.9, 0.05}, std::pair{0.1, 0.0}}) {
        RelatednessTable scaled;
        for (const auto& [k, v] : base.entries()) scaled.set(k.first, k.second, a * v + b);
        scaled.set_missing(a * base.missing() + b);
        scaled.set_self(a * base.self_score() + b);
        for (int trial = 0; trial < 100; ++trial) {
            VisitGrid visits(p);
            for (int s = 0; s < 8; ++s) visits.stamp({pos(rng), pos(rng)});
            std::string target = palette[rng() % palette.size()];
            std::vector<Candidate> cands;
            for (int k = 0; k < 6; ++k) {
                std::vector<std::string> cats{palette[rng() % palette.size()]};
                if (rng() % 2) cats.push_back(palette[rng() % palette.size()]);
                cands.push_back(synthetic_candidate(k, {pos(rng), pos(rng)}, cats));
            }
            EXPECT_EQ(score_heuristic(cands, target, visits, base).choice,
                      score_heuristic(cands, target, visits, scaled).choice);
        }
    }
}

TEST(RelatednessTable, RejectsOutOfRangeScoresAndRoundTrips) {
    RelatednessTable t;
    EXPECT_THROW(t.set("a", "b", 1.2), Error);
    t.set("couch", "tv", 0.6);
    EXPECT_DOUBLE_EQ(t.raw("tv", "couch"), 0.6);
    RelatednessTable back = relatedness_from_json(relatedness_to_json(RelatednessTable::defaults()));
    EXPECT_EQ(back.entries(), RelatednessTable::defaults().entries());
}

TEST(VisitGrid, NoveltyIsTheUnvisitedFraction) {
    FloorPlan p = testing::open_room(40, 40);
    VisitGrid g(p);
    EXPECT_DOUBLE_EQ(g.novelty({5, 5}), 1.0);
    g.stamp({5, 5}, 2.5);
    EXPECT_DOUBLE_EQ(g.novelty({5, 5}), 0.0);
    g.stamp({1, 1}, 0.3);
    double n = g.novelty({2, 1});
    EXPECT_GT(n, 0.0);
    EXPECT_LT(n, 1.0);
}

}  // namespace
}  // namespace imaginenav
