#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

namespace imaginenav {
namespace {

using testing::free_cells;

struct Probe {
    FloorPlan plan;
    Pose pose;
};

std::vector<Probe> probes(int n) {
    std::vector<Probe> out;
    std::mt19937_64 rng(8);
    for (std::uint64_t seed = 30; static_cast<int>(out.size()) < n; ++seed) {
        FloorPlan p = generate_floorplan(seed);
        auto cells = free_cells(p);
        for (int k = 0; k < 5; ++k) {
            Cell c = cells[std::uniform_int_distribution<std::size_t>(0, cells.size() - 1)(rng)];
            out.push_back({p, testing::center_pose(p, c, 30.0 * k)});
        }
    }
    return out;
}

TEST(Imagine, OracleEqualsRenderingAtTheWaypoint) {
    ImaginationConfig cfg;
    for (const auto& pr : probes(20)) {
        RelativeWaypoint wp{0.0, 0.0, 10.0};
        View v = imagine(pr.plan, pr.pose, wp, cfg);
        View want = render_view(pr.plan, apply_waypoint(pr.pose, wp));
        EXPECT_EQ(v.rays, want.rays);
        EXPECT_EQ(v.pose, want.pose);
    }
}

TEST(Imagine, ZeroNoiseCorruptionEqualsOracle) {
    ImaginationConfig oracle, quiet;
    quiet.mode = ImaginationMode::Corrupted;
    quiet.corruption = {0.0, 0.0, 0.0, 0.0};
    quiet.rng_seed = 42;
    for (const auto& pr : probes(20)) {
        RelativeWaypoint wp{0.0, 0.5, 0.0};
        try {
            EXPECT_EQ(imagine(pr.plan, pr.pose, wp, quiet).rays, imagine(pr.plan, pr.pose, wp, oracle).rays);
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::NoFreeCell);
        }
    }
}

TEST(Imagine, CertainHallucinationAddsAnAbsentCategory) {
    FloorPlan hall = testing::open_room(60, 60);
    std::vector<std::string> palette = WorldSpec::defaults().palette();
    FloorPlan p(hall.width(), hall.height(), hall.cell_size(), hall.cells(), {}, 0, palette, "hall");
    ImaginationConfig cfg;
    cfg.mode = ImaginationMode::Corrupted;
    cfg.corruption = {0.0, 1.0, 0.0, 0.0};
    for (int k = 0; k < 12; ++k) {
        cfg.rng_seed = static_cast<std::uint64_t>(k);
        Pose pose{7.5, 7.5, 30.0 * k};
        View oracle = render_view(p, pose);
        View v = imagine_at(p, pose, cfg);
        EXPECT_TRUE(oracle.visible_categories().empty());
        EXPECT_FALSE(v.visible_categories().empty());
        int labeled = 0;
        for (const Ray& r : v.rays) labeled += r.labeled();
        EXPECT_GE(labeled, kMinHallucinationRun);
        EXPECT_LE(labeled, 16);
    }
}

TEST(Imagine, CorruptionKeepsGeometryAndIsDeterministic) {
    ImaginationConfig cfg;
    cfg.mode = ImaginationMode::Corrupted;
    cfg.corruption = {0.5, 0.5, 0.3, 0.5};
    cfg.rng_seed = 9;
    for (const auto& pr : probes(30)) {
        View oracle = render_view(pr.plan, pr.pose);
        View a = imagine_at(pr.plan, pr.pose, cfg), b = imagine_at(pr.plan, pr.pose, cfg);
        EXPECT_EQ(a.rays, b.rays);
        EXPECT_EQ(a.pose, oracle.pose);
        EXPECT_EQ(a.hfov, oracle.hfov);
        EXPECT_EQ(a.width(), oracle.width());
        for (std::size_t k = 0; k < a.rays.size(); ++k) {
            EXPECT_GT(a.rays[k].depth, 0.0);
            EXPECT_LE(a.rays[k].depth, a.max_range);
            EXPECT_LE(std::fabs(a.rays[k].depth - oracle.rays[k].depth), 2 * 0.5 + 1e-9);
            EXPECT_EQ(a.rays[k].category.has_value(), a.rays[k].instance_id.has_value());
        }
    }
}

TEST(Imagine, DifferentSeedsGiveDifferentCorruption) {
    ImaginationConfig a, b;
    a.mode = b.mode = ImaginationMode::Corrupted;
    a.rng_seed = 1;
    b.rng_seed = 2;
    int differ = 0;
    for (const auto& pr : probes(20)) differ += imagine_at(pr.plan, pr.pose, a).rays != imagine_at(pr.plan, pr.pose, b).rays;
    EXPECT_GT(differ, 10);
}

TEST(ResolveWaypoint, SnapsOntoTheNearestFreeCell) {
    FloorPlan p = testing::plan_from_ascii({"#####", "#...#", "#...#", "#####"});
    Pose inside_wall{1.1, 0.1, 0.0};
    Pose r = resolve_waypoint(p, inside_wall);
    EXPECT_TRUE(p.is_free(position(r)));
    EXPECT_LE(distance(position(r), position(inside_wall)), kSnapRadius + 1e-9);
    EXPECT_EQ(p.cell_at(position(r)), (Cell{3, 1}));
    EXPECT_DOUBLE_EQ(r.heading, 0.0);
}

TEST(ResolveWaypoint, FarFromFreeSpaceIsNoFreeCell) {
    std::vector<std::string> rows(12, std::string(12, '#'));
    rows[1][1] = '.';
    FloorPlan p = testing::plan_from_ascii(rows);
    try {
        resolve_waypoint(p, {2.0, 1.5, 0.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoFreeCell);
    }
}

TEST(ImaginationConfig, ValidatesRanges) {
    ImaginationConfig cfg;
    cfg.corruption.label_swap = 1.5;
    EXPECT_THROW(cfg.validate(), Error);
    cfg.corruption.label_swap = 0.1;
    cfg.corruption.depth_noise = -1.0;
    EXPECT_THROW(cfg.validate(), Error);
    EXPECT_EQ(imagination_mode_from_string("corrupted"), ImaginationMode::Corrupted);
    EXPECT_THROW(imagination_mode_from_string("nvs"), Error);
}

}  // namespace
}  // namespace imaginenav
