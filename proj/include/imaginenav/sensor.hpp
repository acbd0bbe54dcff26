#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "imaginenav/core.hpp"
#include "imaginenav/image.hpp"
#include "imaginenav/world.hpp"

namespace imaginenav {

/// One rendered column: range to the first occupied cell and what it belongs to.
struct Ray {
    double depth = 0.0;
    std::optional<std::string> category;
    std::optional<int> instance_id;

    bool labeled() const { return category.has_value(); }
    friend bool operator==(const Ray&, const Ray&) = default;
};

struct RenderParams {
    double hfov = 79.0;
    int width = 64;
    double max_range = 10.0;
};

struct View {
    Pose pose;
    double hfov = 79.0;
    double max_range = 10.0;
    std::vector<Ray> rays;  // left to right

    int width() const { return static_cast<int>(rays.size()); }

    /// World-frame direction of column j in degrees.
    double column_heading(int j) const {
        return pose.heading + hfov * (0.5 - (j + 0.5) / static_cast<double>(rays.size()));
    }

    double min_depth() const {
        double m = std::numeric_limits<double>::infinity();
        for (const Ray& r : rays) m = std::min(m, r.depth);
        return m;
    }

    bool sees_category(const std::string& category) const {
        return std::any_of(rays.begin(), rays.end(),
                           [&](const Ray& r) { return r.category && *r.category == category; });
    }

    std::set<std::string> visible_categories() const {
        std::set<std::string> out;
        for (const Ray& r : rays)
            if (r.category) out.insert(*r.category);
        return out;
    }

    friend bool operator==(const View&, const View&) = default;
};

struct Panorama {
    static constexpr int kViews = 6;
    static constexpr double kSpacing = 60.0;
    std::array<View, kViews> views;
};

/// Rendered depths are clamped to at least this, so a wall touching the camera still reads positive.
inline constexpr double kMinRayDepth = 1e-4;

struct RayHit {
    double distance = 0.0;
    std::optional<Cell> cell;  // nullopt when nothing was hit within range
};

/// Grid traversal (Amanatides-Woo) from `origin` along `heading_deg`, stopping at the first cell for
/// which `blocked` holds. Works on any grid given its cell size and lower-left corner.
template <typename Blocked>
RayHit march_grid(double cell_size, Vec2 grid_origin, Vec2 origin, double heading_deg, double max_range,
                  Blocked&& blocked) {
    const double cs = cell_size;
    const double gx = (origin.x - grid_origin.x) / cs;
    const double gy = (origin.y - grid_origin.y) / cs;
    const double dx = std::cos(deg2rad(heading_deg));
    const double dy = std::sin(deg2rad(heading_deg));
    int i = static_cast<int>(std::floor(gx));
    int j = static_cast<int>(std::floor(gy));
    const int step_i = dx > 0 ? 1 : -1;
    const int step_j = dy > 0 ? 1 : -1;
    const double inf = std::numeric_limits<double>::infinity();
    const double delta_x = std::fabs(dx) < 1e-12 ? inf : 1.0 / std::fabs(dx);
    const double delta_y = std::fabs(dy) < 1e-12 ? inf : 1.0 / std::fabs(dy);
    double t_max_x = std::fabs(dx) < 1e-12 ? inf : (dx > 0 ? (i + 1 - gx) : (gx - i)) * delta_x;
    double t_max_y = std::fabs(dy) < 1e-12 ? inf : (dy > 0 ? (j + 1 - gy) : (gy - j)) * delta_y;
    const double limit = max_range / cs;
    double t = 0.0;
    while (true) {
        if (t_max_x < t_max_y) {
            t = t_max_x;
            t_max_x += delta_x;
            i += step_i;
        } else {
            t = t_max_y;
            t_max_y += delta_y;
            j += step_j;
        }
        if (t > limit) return {max_range, std::nullopt};
        if (blocked(Cell{i, j})) return {t * cs, Cell{i, j}};
    }
}

inline RayHit cast_ray(const FloorPlan& plan, Vec2 origin, double heading_deg, double max_range) {
    return march_grid(plan.cell_size(), plan.origin(), origin, heading_deg, max_range,
                      [&](Cell c) { return !plan.is_free(c); });
}

inline View render_view(const FloorPlan& plan, const Pose& pose, const RenderParams& params = {}) {
    if (!plan.is_free(position(pose))) throw Error(ErrorCode::PoseOccupied, "cannot render from an occupied cell");
    if (params.width < 8) throw Error(ErrorCode::Config, "view width must be at least 8 columns");
    View view;
    view.pose = pose;
    view.hfov = params.hfov;
    view.max_range = params.max_range;
    view.rays.resize(static_cast<std::size_t>(params.width));
    for (int c = 0; c < params.width; ++c) {
        double angle = view.column_heading(c);
        RayHit hit = cast_ray(plan, position(pose), angle, params.max_range);
        Ray& ray = view.rays[static_cast<std::size_t>(c)];
        ray.depth = std::clamp(hit.distance, kMinRayDepth, params.max_range);
        if (hit.cell) {
            if (const ObjectInstance* obj = plan.object_at(*hit.cell)) {
                ray.category = obj->category;
                ray.instance_id = obj->id;
            }
        }
    }
    return view;
}

inline Panorama render_panorama(const FloorPlan& plan, const Pose& pose, const RenderParams& params = {}) {
    Panorama pano;
    for (int k = 0; k < Panorama::kViews; ++k)
        pano.views[static_cast<std::size_t>(k)] = render_view(plan, pose.rotated(Panorama::kSpacing * k), params);
    return pano;
}

// ---------------------------------------------------------------------------
// Raster export

struct RasterStyle {
    int column_px = 2;
    int tile_height = 96;
    int gap = 2;
    int badge = 11;
    int legend_row = 12;
};

namespace detail {

inline Rgb ray_color(const Ray& ray, double max_range, bool slice) {
    double v = 1.0 - 0.75 * std::clamp(ray.depth / max_range, 0.0, 1.0);
    if (!slice) v *= 0.4;
    if (ray.category) return hsv_to_rgb(category_hue(*ray.category), 0.85, v);
    return hsv_to_rgb(0.0, 0.0, v);
}

inline Image render_tile(const View& view, const RasterStyle& style) {
    const int w = view.width() * style.column_px;
    const int h = style.tile_height;
    Image tile(w, h);
    for (int c = 0; c < view.width(); ++c) {
        const Ray& ray = view.rays[static_cast<std::size_t>(c)];
        // Wall slice height falls off with range, as in a column raycaster.
        int slice = std::clamp(static_cast<int>(std::lround(h * 0.6 / std::max(ray.depth, 0.6))), 2, h);
        int top = (h - slice) / 2;
        Rgb wall = ray_color(ray, view.max_range, true);
        Rgb dim = ray_color(ray, view.max_range, false);
        for (int y = 0; y < h; ++y) {
            Rgb px = (y >= top && y < top + slice) ? wall : dim;
            for (int dx = 0; dx < style.column_px; ++dx) tile.set(c * style.column_px + dx, y, px);
        }
    }
    return tile;
}

}  // namespace detail

/// Stitches views left to right with optional letter badges and a category legend strip.
inline Image rasterize_image(const std::vector<View>& views, const std::vector<std::string>& labels = {},
                             const RasterStyle& style = {}) {
    if (!labels.empty() && labels.size() != views.size())
        throw Error(ErrorCode::Config, "label count must match tile count");
    int tiles_w = 0;
    for (const View& v : views) tiles_w += v.width() * style.column_px;
    tiles_w += style.gap * std::max<int>(0, static_cast<int>(views.size()) - 1);

    std::set<std::string> cats;
    for (const View& v : views)
        for (const auto& c : v.visible_categories()) cats.insert(c);
    // Legend layout: swatch, name, spacing; wraps to new rows.
    std::vector<std::pair<int, int>> slots;
    int lx = 2, rows = cats.empty() ? 0 : 1;
    const int total_w = std::max(tiles_w, 64);
    for (const auto& c : cats) {
        int need = 10 + static_cast<int>(c.size()) * Image::kGlyphAdvance + 6;
        if (lx + need > total_w && lx > 2) {
            lx = 2;
            ++rows;
        }
        slots.emplace_back(lx, rows - 1);
        lx += need;
    }
    const int legend_h = rows * style.legend_row + (rows ? 2 : 0);
    Image img(total_w, style.tile_height + legend_h, Rgb{0, 0, 0});

    int x = 0;
    for (std::size_t k = 0; k < views.size(); ++k) {
        Image tile = detail::render_tile(views[k], style);
        img.blit(tile, x, 0);
        if (!labels.empty()) {
            img.fill_rect(x + 1, 1, style.badge, style.badge, Rgb{255, 255, 255});
            img.draw_text(x + 4, 3, labels[k].substr(0, 1), Rgb{0, 0, 0});
        }
        x += tile.width() + style.gap;
    }
    std::size_t s = 0;
    for (const auto& c : cats) {
        auto [sx, row] = slots[s++];
        int sy = style.tile_height + 2 + row * style.legend_row;
        img.fill_rect(sx, sy + 1, 8, 8, hsv_to_rgb(category_hue(c), 0.85, 1.0));
        img.draw_text(sx + 10, sy + 1, c, Rgb{255, 255, 255});
    }
    return img;
}

inline std::string rasterize(const View& view, const std::vector<std::string>& labels = {}) {
    return rasterize_image({view}, labels).encode_png();
}

inline std::string rasterize(const Panorama& pano, const std::vector<std::string>& labels = {}) {
    return rasterize_image(std::vector<View>(pano.views.begin(), pano.views.end()), labels).encode_png();
}

inline std::string rasterize(const std::vector<View>& views, const std::vector<std::string>& labels = {}) {
    return rasterize_image(views, labels).encode_png();
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const Ray& r) {
    j = nlohmann::json::array({r.depth, r.category ? nlohmann::json(*r.category) : nlohmann::json(nullptr),
                               r.instance_id ? nlohmann::json(*r.instance_id) : nlohmann::json(nullptr)});
}
inline void from_json(const nlohmann::json& j, Ray& r) {
    r.depth = j.at(0).get<double>();
    r.category = j.at(1).is_null() ? std::nullopt : std::optional<std::string>(j.at(1).get<std::string>());
    r.instance_id = j.at(2).is_null() ? std::nullopt : std::optional<int>(j.at(2).get<int>());
}

inline void to_json(nlohmann::json& j, const View& v) {
    j = nlohmann::json{{"pose", v.pose}, {"hfov", v.hfov}, {"max_range", v.max_range}, {"rays", v.rays}};
}
inline void from_json(const nlohmann::json& j, View& v) {
    v.pose = j.at("pose").get<Pose>();
    v.hfov = j.at("hfov").get<double>();
    v.max_range = j.at("max_range").get<double>();
    v.rays = j.at("rays").get<std::vector<Ray>>();
}

}  // namespace imaginenav
