#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

namespace imaginenav {
namespace {

using testing::free_cells;
using testing::plan_from_ascii;

double fine_march(const FloorPlan& plan, Vec2 origin, double heading_deg, double max_range) {
    const double step = 1e-3;
    const double dx = std::cos(deg2rad(heading_deg)), dy = std::sin(deg2rad(heading_deg));
    for (double t = step; t < max_range; t += step)
        if (!plan.is_free(Vec2{origin.x + t * dx, origin.y + t * dy})) return t;
    return max_range;
}

FloorPlan rotate_quarter(const FloorPlan& p) {
    const int n = p.width();
    std::vector<CellState> cells(p.cells().size());
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) cells[static_cast<std::size_t>(i) * n + (n - 1 - j)] = p.at({i, j});
    std::vector<ObjectInstance> objects = p.objects();
    for (auto& obj : objects)
        for (Cell& c : obj.footprint) c = {n - 1 - c.j, c.i};
    return FloorPlan(n, n, p.cell_size(), std::move(cells), std::move(objects), 0, p.palette(), "rotated");
}

TEST(RenderView, FacingWallOneMeterAwayReadsOneMeter) {
    FloorPlan p = testing::open_room(20, 5);
    // West face of the east wall is at x = 21 * 0.25 = 5.25.
    Pose pose{4.25, 0.875, 0.0};
    RenderParams params;
    params.width = 65;
    View v = render_view(p, pose, params);
    EXPECT_NEAR(v.rays[32].depth, 1.0, 1e-9);
    EXPECT_FALSE(v.rays[32].category);
}

TEST(RenderView, DepthsAreCappedAtMaxRange) {
    FloorPlan p = testing::open_room(100, 100);
    View v = render_view(p, {12.5, 12.5, 33.0});
    for (const Ray& r : v.rays) {
        EXPECT_GT(r.depth, 0.0);
        EXPECT_LE(r.depth, 10.0);
    }
    EXPECT_DOUBLE_EQ(v.rays[10].depth, 10.0);
}

TEST(RenderView, OccupiedPoseThrows) {
    FloorPlan p = testing::open_room(4, 4);
    try {
        render_view(p, {0.1, 0.1, 0.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PoseOccupied);
    }
}

TEST(RenderView, ColumnDirectionsSpanTheFieldOfView) {
    FloorPlan p = testing::open_room(10, 10);
    View v = render_view(p, {1.0, 1.0, 90.0});
    EXPECT_NEAR(v.column_heading(0), 90.0 + 79.0 * (0.5 - 0.5 / 64), 1e-12);
    EXPECT_NEAR(v.column_heading(63), 90.0 + 79.0 * (0.5 - 63.5 / 64), 1e-12);
}

TEST(RenderView, LabelsComeFromObjectFootprints) {
    FloorPlan p = plan_from_ascii({"#######", "#.....#", "#....C#", "#.....#", "#######"}, {{'C', "couch"}});
    View v = render_view(p, {0.375, 0.625, 0.0}, {10.0, 9, 10.0});
    const Ray& mid = v.rays[4];
    ASSERT_TRUE(mid.category);
    EXPECT_EQ(*mid.category, "couch");
    EXPECT_EQ(*mid.instance_id, 0);
    for (const Ray& r : v.rays) EXPECT_EQ(r.category.has_value(), r.instance_id.has_value());
}

TEST(RenderView, MatchesFineStepRayMarcher) {
    std::mt19937_64 rng(12);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        FloorPlan p = generate_floorplan(seed);
        auto cells = free_cells(p);
        std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int k = 0; k < 10; ++k) {
            Cell c = cells[pick(rng)];
            Pose pose{(c.i + unit(rng)) * p.cell_size(), (c.j + unit(rng)) * p.cell_size(), 360.0 * unit(rng)};
            View v = render_view(p, pose);
            for (int col = 0; col < v.width(); ++col) {
                double want = fine_march(p, position(pose), v.column_heading(col), v.max_range);
                EXPECT_NEAR(v.rays[static_cast<std::size_t>(col)].depth, want, p.cell_size() / 2)
                    << "seed " << seed << " column " << col;
            }
        }
    }
}

TEST(RenderPanorama, HeadingsAreSixtyDegreesApart) {
    FloorPlan p = testing::open_room(10, 10);
    Panorama pano = render_panorama(p, {1.0, 1.0, 0.0});
    for (int k = 0; k < 6; ++k) EXPECT_DOUBLE_EQ(pano.views[static_cast<std::size_t>(k)].pose.heading, 60.0 * k);
    EXPECT_DOUBLE_EQ(wrap_angle(pano.views[3].pose.heading - pano.views[0].pose.heading), 180.0);
    for (const View& v : pano.views) {
        EXPECT_DOUBLE_EQ(v.pose.x, 1.0);
        EXPECT_DOUBLE_EQ(v.pose.y, 1.0);
    }
}

TEST(RenderPanorama, TurningSixtyDegreesShiftsViewsByOneSlot) {
    FloorPlan p = generate_floorplan(5);
    Cell c = free_cells(p)[200];
    Pose pose = testing::center_pose(p, c, 17.0);
    Panorama a = render_panorama(p, pose);
    Panorama b = render_panorama(p, pose.rotated(60.0));
    for (int k = 0; k < 6; ++k) {
        const View& va = a.views[static_cast<std::size_t>((k + 1) % 6)];
        const View& vb = b.views[static_cast<std::size_t>(k)];
        for (int col = 0; col < va.width(); ++col) {
            EXPECT_NEAR(va.rays[static_cast<std::size_t>(col)].depth, vb.rays[static_cast<std::size_t>(col)].depth, 1e-9);
            EXPECT_EQ(va.rays[static_cast<std::size_t>(col)].category, vb.rays[static_cast<std::size_t>(col)].category);
        }
    }
}

TEST(RenderPanorama, RotatedPlanGivesRotatedViewsRayForRay) {
    std::mt19937_64 rng(3);
    FloorPlan base = testing::random_plan(rng, 21, 21, 0.15);
    std::vector<CellState> cells = base.cells();
    cells[static_cast<std::size_t>(10) * 21 + 10] = CellState::Free;
    std::vector<ObjectInstance> objs;
    for (std::size_t k = 0; k < cells.size(); ++k)
        if (cells[k] == CellState::Occupied && k % 7 == 0) {
            ObjectInstance o;
            o.id = static_cast<int>(objs.size());
            o.category = k % 2 ? "couch" : "tv";
            o.footprint = {base.cell_of_index(k)};
            objs.push_back(o);
        }
    FloorPlan p(21, 21, 0.25, cells, objs, 0);
    FloorPlan q = rotate_quarter(p);
    Pose at{10.5 * 0.25, 10.5 * 0.25, 7.3};
    // A quarter turn of the world about the agent is a quarter turn of every view.
    for (int k = 0; k < 6; ++k) {
        View a = render_view(p, at.rotated(60.0 * k));
        View b = render_view(q, at.rotated(60.0 * k + 90.0));
        for (int col = 0; col < a.width(); ++col) {
            EXPECT_NEAR(a.rays[static_cast<std::size_t>(col)].depth, b.rays[static_cast<std::size_t>(col)].depth, 1e-9);
            EXPECT_EQ(a.rays[static_cast<std::size_t>(col)].category, b.rays[static_cast<std::size_t>(col)].category);
        }
    }
}

TEST(Rasterize, PngSignatureAndDeterminism) {
    FloorPlan p = generate_floorplan(2);
    Pose pose = testing::center_pose(p, free_cells(p)[50], 0.0);
    View v = render_view(p, pose);
    std::string a = rasterize(v), b = rasterize(v);
    ASSERT_GE(a.size(), 8u);
    EXPECT_EQ(a.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
    EXPECT_EQ(a, b);
}

TEST(Rasterize, SixTilesWithBadgesLeftToRight) {
    FloorPlan p = generate_floorplan(2);
    Panorama pano = render_panorama(p, testing::center_pose(p, free_cells(p)[80], 0.0));
    std::vector<View> views(pano.views.begin(), pano.views.end());
    std::vector<std::string> labels{"A", "B", "C", "D", "E", "F"};
    RasterStyle style;
    Image img = rasterize_image(views, labels, style);
    const int tile_w = 64 * style.column_px;
    EXPECT_GE(img.width(), 6 * tile_w + 5 * style.gap);
    for (int k = 0; k < 6; ++k) {
        int x0 = k * (tile_w + style.gap);
        EXPECT_EQ(img.at(x0 + 1, 1), (Rgb{255, 255, 255})) << "badge " << k;
        // Each badge carries its own glyph: compare against a reference drawing of the letter.
        Image ref(style.badge, style.badge, Rgb{255, 255, 255});
        ref.draw_text(3, 2, labels[static_cast<std::size_t>(k)], Rgb{0, 0, 0});
        for (int y = 0; y < style.badge; ++y)
            for (int x = 0; x < style.badge; ++x) EXPECT_EQ(img.at(x0 + 1 + x, 1 + y), ref.at(x, y));
    }
    EXPECT_THROW(rasterize_image(views, {"A"}), Error);
}

TEST(Rasterize, AllCouchRaysShareTheCouchHue) {
    View v;
    v.pose = {0, 0, 0};
    for (int k = 0; k < 64; ++k) v.rays.push_back({0.5 + 0.1 * k, std::string("couch"), 1});
    RasterStyle style;
    Image img = rasterize_image({v}, {}, style);
    const double hue = category_hue("couch");
    for (int y = 0; y < style.tile_height; ++y)
        for (int x = 0; x < 64 * style.column_px; ++x) {
            double h = rgb_hue(img.at(x, y));
            ASSERT_GE(h, 0.0);
            double diff = std::fabs(wrap_angle(h - hue));
            EXPECT_LT(diff, 3.0) << x << "," << y;
        }
}

TEST(ViewJson, RoundTrip) {
    FloorPlan p = generate_floorplan(6);
    View v = render_view(p, testing::center_pose(p, free_cells(p)[10], 45.0));
    nlohmann::json j = v;
    View back = j.get<View>();
    EXPECT_EQ(back.rays, v.rays);
    EXPECT_DOUBLE_EQ(back.pose.heading, v.pose.heading);
}

}  // namespace
}  // namespace imaginenav
