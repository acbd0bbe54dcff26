#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "imaginenav/core.hpp"
#include "imaginenav/sensor.hpp"
#include "imaginenav/where2imagine.hpp"
#include "imaginenav/world.hpp"

namespace imaginenav {

enum class ImaginationMode { Oracle, Corrupted };

inline std::string_view to_string(ImaginationMode m) { return m == ImaginationMode::Oracle ? "oracle" : "corrupted"; }

inline ImaginationMode imagination_mode_from_string(std::string_view s) {
    if (s == "oracle") return ImaginationMode::Oracle;
    if (s == "corrupted") return ImaginationMode::Corrupted;
    throw Error(ErrorCode::Config, "unknown imagination mode '" + std::string(s) + "'");
}

struct Corruption {
    double label_swap = 0.10;
    double hallucination = 0.15;
    double dropout = 0.10;
    double depth_noise = 0.5;  // meters

    friend bool operator==(const Corruption&, const Corruption&) = default;
};

struct ImaginationConfig {
    ImaginationMode mode = ImaginationMode::Oracle;
    Corruption corruption;
    std::uint64_t rng_seed = 0;

    void validate() const {
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!prob(corruption.label_swap) || !prob(corruption.hallucination) || !prob(corruption.dropout))
            throw Error(ErrorCode::Config, "corruption probabilities must lie in [0, 1]");
        if (!(corruption.depth_noise >= 0.0)) throw Error(ErrorCode::Config, "depth noise sigma must be >= 0");
    }

    friend bool operator==(const ImaginationConfig&, const ImaginationConfig&) = default;
};

inline constexpr double kSnapRadius = 0.5;
inline constexpr int kMinHallucinationRun = 4;

/// Moves a waypoint into the grid and, if it sits on an obstacle, onto the nearest free cell
/// within `kSnapRadius`. Heading is kept.
inline Pose resolve_waypoint(const FloorPlan& plan, const Pose& wp) {
    const double cs = plan.cell_size();
    const Vec2 o = plan.origin();
    const double eps = 1e-9;
    Vec2 p{std::clamp(wp.x, o.x + eps, o.x + plan.width() * cs - eps),
           std::clamp(wp.y, o.y + eps, o.y + plan.height() * cs - eps)};
    if (plan.is_free(p)) return {p.x, p.y, wp.heading};
    const Cell c = plan.cell_at(p);
    const int reach = static_cast<int>(std::ceil(kSnapRadius / cs)) + 1;
    std::optional<Cell> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int dj = -reach; dj <= reach; ++dj) {
        for (int di = -reach; di <= reach; ++di) {
            Cell n{c.i + di, c.j + dj};
            if (!plan.is_free(n)) continue;
            double d = distance(plan.cell_center(n), p);
            if (d <= kSnapRadius + 1e-9 && d < best_d - 1e-12) {
                best_d = d;
                best = n;
            }
        }
    }
    if (!best) throw Error(ErrorCode::NoFreeCell, "no free cell within 0.5 m of the waypoint");
    Vec2 q = plan.cell_center(*best);
    return {q.x, q.y, wp.heading};
}

namespace detail {

inline std::uint64_t pose_seed(std::uint64_t seed, const Pose& pose) {
    std::uint64_t s = mix_seed(seed, std::bit_cast<std::uint64_t>(pose.x));
    s = mix_seed(s, std::bit_cast<std::uint64_t>(pose.y));
    return mix_seed(s, std::bit_cast<std::uint64_t>(pose.heading));
}

}  // namespace detail

/// Applies the label and depth corruption channel to an oracle view. Geometry fields are untouched.
inline View corrupt_view(View view, const Corruption& c, const std::vector<std::string>& palette, std::uint64_t seed) {
    std::mt19937_64 rng(detail::pose_seed(seed, view.pose));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

    for (Ray& ray : view.rays) {
        if (!ray.category) continue;
        double u = unit(rng);
        if (u < c.label_swap && palette.size() > 1) {
            std::string next;
            do next = palette[pick(palette.size())];
            while (next == *ray.category);
            ray.category = next;
            ray.instance_id = -1;
        } else if (u < c.label_swap + c.dropout) {
            ray.category.reset();
            ray.instance_id.reset();
        }
    }

    if (!palette.empty() && unit(rng) < c.hallucination) {
        std::vector<std::pair<int, int>> runs;  // [begin, end)
        const int w = view.width();
        for (int b = 0; b < w;) {
            if (view.rays[static_cast<std::size_t>(b)].category) {
                ++b;
                continue;
            }
            int e = b;
            while (e < w && !view.rays[static_cast<std::size_t>(e)].category) ++e;
            if (e - b >= kMinHallucinationRun) runs.emplace_back(b, e);
            b = e;
        }
        if (!runs.empty()) {
            auto [b, e] = runs[pick(runs.size())];
            int len = std::uniform_int_distribution<int>(kMinHallucinationRun, std::min(e - b, 16))(rng);
            int start = std::uniform_int_distribution<int>(b, e - len)(rng);
            std::string cat = palette[pick(palette.size())];
            for (int k = start; k < start + len; ++k) {
                view.rays[static_cast<std::size_t>(k)].category = cat;
                view.rays[static_cast<std::size_t>(k)].instance_id = -1;
            }
        }
    }

    if (c.depth_noise > 0.0) {
        std::normal_distribution<double> noise(0.0, c.depth_noise);
        for (Ray& ray : view.rays) {
            double n = std::clamp(noise(rng), -2.0 * c.depth_noise, 2.0 * c.depth_noise);
            ray.depth = std::clamp(ray.depth + n, kMinRayDepth, view.max_range);
        }
    }
    return view;
}

/// View at an already resolved waypoint pose.
inline View imagine_at(const FloorPlan& plan, const Pose& waypoint, const ImaginationConfig& cfg,
                       const RenderParams& render = {}) {
    View oracle = render_view(plan, waypoint, render);
    if (cfg.mode == ImaginationMode::Oracle) return oracle;
    return corrupt_view(std::move(oracle), cfg.corruption, plan.palette(), cfg.rng_seed);
}

inline View imagine(const FloorPlan& plan, const Pose& pose, const RelativeWaypoint& wp, const ImaginationConfig& cfg,
                    const RenderParams& render = {}) {
    return imagine_at(plan, resolve_waypoint(plan, apply_waypoint(pose, wp)), cfg, render);
}

}  // namespace imaginenav
