#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "imaginenav/core.hpp"

namespace imaginenav {

enum class CellState : std::uint8_t { Free, Occupied };

struct ObjectInstance {
    int id = 0;
    std::string category;
    std::vector<Cell> footprint;
    /// Free cell center next to the footprint; geodesic queries to the object end here.
    Vec2 anchor;
};

/// Occupancy grid plus semantic object instances. Immutable once built.
class FloorPlan {
public:
    FloorPlan() = default;

    FloorPlan(int width, int height, double cell_size, std::vector<CellState> cells,
              std::vector<ObjectInstance> objects, std::uint64_t seed,
              std::vector<std::string> palette = {}, std::string id = {}, Vec2 origin = {})
        : width_(width),
          height_(height),
          cell_size_(cell_size),
          origin_(origin),
          seed_(seed),
          id_(std::move(id)),
          cells_(std::move(cells)),
          objects_(std::move(objects)),
          palette_(std::move(palette)) {
        if (width_ <= 0 || height_ <= 0 || cell_size_ <= 0.0 ||
            cells_.size() != static_cast<std::size_t>(width_) * height_) {
            throw Error(ErrorCode::Config, "floorplan dimensions do not match cell data");
        }
        object_at_.assign(cells_.size(), -1);
        std::set<int> ids;
        for (std::size_t k = 0; k < objects_.size(); ++k) {
            const auto& obj = objects_[k];
            if (!ids.insert(obj.id).second) throw Error(ErrorCode::Config, "duplicate object id");
            if (obj.category.empty()) throw Error(ErrorCode::Config, "object category is empty");
            for (const Cell& c : obj.footprint) {
                if (in_bounds(c)) object_at_[index(c)] = static_cast<int>(k);
            }
        }
        if (palette_.empty()) {
            std::set<std::string> cats;
            for (const auto& obj : objects_) cats.insert(obj.category);
            palette_.assign(cats.begin(), cats.end());
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    double cell_size() const { return cell_size_; }
    Vec2 origin() const { return origin_; }
    std::uint64_t seed() const { return seed_; }
    const std::string& id() const { return id_; }
    const std::vector<ObjectInstance>& objects() const { return objects_; }
    const std::vector<std::string>& palette() const { return palette_; }
    const std::vector<CellState>& cells() const { return cells_; }

    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.j) * width_ + c.i; }
    Cell cell_of_index(std::size_t idx) const {
        return {static_cast<int>(idx % width_), static_cast<int>(idx / width_)};
    }

    bool in_bounds(Cell c) const { return c.i >= 0 && c.j >= 0 && c.i < width_ && c.j < height_; }
    bool in_bounds(Vec2 p) const { return in_bounds(cell_at(p)); }

    Cell cell_at(Vec2 p) const {
        return {static_cast<int>(std::floor((p.x - origin_.x) / cell_size_)),
                static_cast<int>(std::floor((p.y - origin_.y) / cell_size_))};
    }
    Vec2 cell_center(Cell c) const {
        return {origin_.x + (c.i + 0.5) * cell_size_, origin_.y + (c.j + 0.5) * cell_size_};
    }

    CellState at(Cell c) const { return cells_[index(c)]; }
    /// Out-of-bounds cells count as occupied.
    bool is_free(Cell c) const { return in_bounds(c) && at(c) == CellState::Free; }
    bool is_free(Vec2 p) const { return is_free(cell_at(p)); }

    /// Object occupying the cell, if any.
    const ObjectInstance* object_at(Cell c) const {
        if (!in_bounds(c)) return nullptr;
        int k = object_at_[index(c)];
        return k < 0 ? nullptr : &objects_[static_cast<std::size_t>(k)];
    }

    const ObjectInstance* find_object(int id) const {
        for (const auto& obj : objects_)
            if (obj.id == id) return &obj;
        return nullptr;
    }

    std::vector<const ObjectInstance*> instances_of(const std::string& category) const {
        std::vector<const ObjectInstance*> out;
        for (const auto& obj : objects_)
            if (obj.category == category) out.push_back(&obj);
        return out;
    }

    std::size_t free_count() const {
        return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), CellState::Free));
    }

    friend bool operator==(const FloorPlan& a, const FloorPlan& b) {
        if (a.width_ != b.width_ || a.height_ != b.height_ || a.cell_size_ != b.cell_size_ ||
            a.origin_ != b.origin_ || a.seed_ != b.seed_ || a.id_ != b.id_ ||
            a.cells_ != b.cells_ || a.palette_ != b.palette_ ||
            a.objects_.size() != b.objects_.size())
            return false;
        for (std::size_t k = 0; k < a.objects_.size(); ++k) {
            const auto& x = a.objects_[k];
            const auto& y = b.objects_[k];
            if (x.id != y.id || x.category != y.category || x.footprint != y.footprint ||
                x.anchor != y.anchor)
                return false;
        }
        return true;
    }

private:
    int width_ = 0;
    int height_ = 0;
    double cell_size_ = 0.25;
    Vec2 origin_;
    std::uint64_t seed_ = 0;
    std::string id_;
    std::vector<CellState> cells_;
    std::vector<ObjectInstance> objects_;
    std::vector<std::string> palette_;
    std::vector<int> object_at_;
};

// ---------------------------------------------------------------------------
// Procedural generation

struct ObjectRule {
    std::string category;
    int length = 2;  // cells along the wall it backs onto
    int depth = 1;   // cells away from that wall
    bool against_wall = true;
};

struct RoomType {
    std::string name;
    std::vector<ObjectRule> objects;
    int min_objects = 1;
    int max_objects = 3;
};

struct WorldSpec {
    int width = 64;
    int height = 64;
    double cell_size = 0.25;
    int min_rooms = 6;
    int max_rooms = 9;
    int min_room_side = 9;
    int door_width = 3;
    int extra_doors = 1;
    int max_retries = 64;
    std::vector<RoomType> room_types;

    static WorldSpec defaults();

    std::vector<std::string> palette() const {
        std::set<std::string> cats;
        for (const auto& rt : room_types)
            for (const auto& rule : rt.objects) cats.insert(rule.category);
        return {cats.begin(), cats.end()};
    }
};

inline WorldSpec WorldSpec::defaults() {
    WorldSpec spec;
    spec.room_types = {
        {"living_room",
         {{"couch", 6, 3, true}, {"tv", 3, 1, true}, {"plant", 1, 1, false}, {"chair", 2, 2, false}},
         2, 3},
        {"bedroom",
         {{"bed", 6, 5, true}, {"wardrobe", 4, 2, true}, {"nightstand", 2, 2, true}},
         1, 3},
        {"kitchen",
         {{"refrigerator", 3, 3, true}, {"oven", 3, 2, true}, {"sink", 2, 2, true}, {"table", 4, 3, false}},
         2, 3},
        {"bathroom",
         {{"toilet", 2, 2, true}, {"bathtub", 6, 3, true}, {"sink", 2, 2, true}},
         1, 3},
        {"office",
         {{"desk", 4, 2, true}, {"bookshelf", 4, 1, true}, {"chair", 2, 2, false}},
         1, 3},
    };
    return spec;
}

namespace detail {

struct Rect {
    int x0, y0, x1, y1;  // inclusive
    int w() const { return x1 - x0 + 1; }
    int h() const { return y1 - y0 + 1; }
};

struct BspNode {
    Rect rect;
    int left = -1;
    int right = -1;
    bool vertical_wall = false;  // wall is a column x = wall
    int wall = 0;
};

inline std::size_t flood_fill_count(int width, int height, const std::vector<CellState>& cells,
                                    std::size_t start) {
    std::vector<char> seen(cells.size(), 0);
    std::vector<std::size_t> stack{start};
    seen[start] = 1;
    std::size_t count = 0;
    while (!stack.empty()) {
        std::size_t idx = stack.back();
        stack.pop_back();
        ++count;
        int i = static_cast<int>(idx % width);
        int j = static_cast<int>(idx / width);
        const int di[4] = {1, -1, 0, 0};
        const int dj[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            int ni = i + di[k];
            int nj = j + dj[k];
            if (ni < 0 || nj < 0 || ni >= width || nj >= height) continue;
            std::size_t n = static_cast<std::size_t>(nj) * width + ni;
            if (seen[n] || cells[n] != CellState::Free) continue;
            seen[n] = 1;
            stack.push_back(n);
        }
    }
    return count;
}

/// True when every Free cell is in a single 4-connected component.
inline bool free_space_connected(int width, int height, const std::vector<CellState>& cells) {
    std::size_t total = static_cast<std::size_t>(std::count(cells.begin(), cells.end(), CellState::Free));
    if (total == 0) return true;
    auto first = static_cast<std::size_t>(
        std::find(cells.begin(), cells.end(), CellState::Free) - cells.begin());
    return flood_fill_count(width, height, cells, first) == total;
}

}  // namespace detail

inline bool free_space_connected(const FloorPlan& plan) {
    return detail::free_space_connected(plan.width(), plan.height(), plan.cells());
}

/// Picks the free 4-neighbour of a footprint closest to its centroid.
inline std::optional<Cell> choose_anchor_cell(int width, int height, const std::vector<CellState>& cells,
                                              const std::vector<Cell>& footprint) {
    if (footprint.empty()) return std::nullopt;
    double cx = 0.0, cy = 0.0;
    for (const Cell& c : footprint) {
        cx += c.i;
        cy += c.j;
    }
    cx /= static_cast<double>(footprint.size());
    cy /= static_cast<double>(footprint.size());
    std::set<Cell> fp(footprint.begin(), footprint.end());
    std::optional<Cell> best;
    double best_d = std::numeric_limits<double>::infinity();
    std::set<Cell> candidates;
    for (const Cell& c : footprint) {
        const Cell nbrs[4] = {{c.i + 1, c.j}, {c.i - 1, c.j}, {c.i, c.j + 1}, {c.i, c.j - 1}};
        for (const Cell& n : nbrs) {
            if (n.i < 0 || n.j < 0 || n.i >= width || n.j >= height) continue;
            if (fp.count(n)) continue;
            if (cells[static_cast<std::size_t>(n.j) * width + n.i] != CellState::Free) continue;
            candidates.insert(n);
        }
    }
    for (const Cell& n : candidates) {  // ordered, so ties resolve deterministically
        double d = std::hypot(n.i - cx, n.j - cy);
        if (d < best_d - 1e-12) {
            best_d = d;
            best = n;
        }
    }
    return best;
}

namespace detail {

class PlanBuilder {
public:
    PlanBuilder(const WorldSpec& spec, std::mt19937_64& rng)
        : spec_(spec), rng_(rng), w_(spec.width), h_(spec.height),
          cells_(static_cast<std::size_t>(w_) * h_, CellState::Occupied),
          reserved_(cells_.size(), 0) {}

    bool build() {
        if (!partition()) return false;
        for (int leaf : leaves_) carve(nodes_[static_cast<std::size_t>(leaf)].rect);
        for (std::size_t n = 0; n < nodes_.size(); ++n) {
            if (nodes_[n].left >= 0 && !carve_door(nodes_[n])) return false;
        }
        for (int e = 0; e < spec_.extra_doors; ++e) carve_extra_door();
        if (!free_space_connected(w_, h_, cells_)) return false;
        return furnish();
    }

    std::vector<CellState> cells() const { return cells_; }
    std::vector<ObjectInstance> objects() const { return objects_; }

private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * w_ + i; }
    bool free(int i, int j) const {
        return i >= 0 && j >= 0 && i < w_ && j < h_ && cells_[idx(i, j)] == CellState::Free;
    }

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    bool partition() {
        nodes_.push_back({Rect{1, 1, w_ - 2, h_ - 2}});
        leaves_ = {0};
        const int target = uniform(spec_.min_rooms, spec_.max_rooms);
        const int min_side = spec_.min_room_side;
        while (static_cast<int>(leaves_.size()) < target) {
            // Split the largest splittable leaf.
            int best = -1;
            int best_area = 0;
            for (std::size_t k = 0; k < leaves_.size(); ++k) {
                const Rect& r = nodes_[static_cast<std::size_t>(leaves_[k])].rect;
                bool splittable = r.w() >= 2 * min_side + 1 || r.h() >= 2 * min_side + 1;
                if (splittable && r.w() * r.h() > best_area) {
                    best_area = r.w() * r.h();
                    best = static_cast<int>(k);
                }
            }
            if (best < 0) break;
            int node_id = leaves_[static_cast<std::size_t>(best)];
            Rect r = nodes_[static_cast<std::size_t>(node_id)].rect;
            bool can_v = r.w() >= 2 * min_side + 1;
            bool can_h = r.h() >= 2 * min_side + 1;
            bool vertical;
            if (can_v && can_h) vertical = r.w() > r.h() ? true : (r.h() > r.w() ? false : uniform(0, 1) == 1);
            else vertical = can_v;
            BspNode& node = nodes_[static_cast<std::size_t>(node_id)];
            node.vertical_wall = vertical;
            Rect a = r, b = r;
            if (vertical) {
                node.wall = uniform(r.x0 + min_side, r.x1 - min_side);
                a.x1 = node.wall - 1;
                b.x0 = node.wall + 1;
            } else {
                node.wall = uniform(r.y0 + min_side, r.y1 - min_side);
                a.y1 = node.wall - 1;
                b.y0 = node.wall + 1;
            }
            int ia = static_cast<int>(nodes_.size());
            nodes_.push_back({a});
            nodes_.push_back({b});
            nodes_[static_cast<std::size_t>(node_id)].left = ia;
            nodes_[static_cast<std::size_t>(node_id)].right = ia + 1;
            leaves_.erase(leaves_.begin() + best);
            leaves_.push_back(ia);
            leaves_.push_back(ia + 1);
        }
        return static_cast<int>(leaves_.size()) >= spec_.min_rooms;
    }

    void carve(const Rect& r) {
        for (int j = r.y0; j <= r.y1; ++j)
            for (int i = r.x0; i <= r.x1; ++i) cells_[idx(i, j)] = CellState::Free;
    }

    /// Opens `width` wall cells at (wall, p..p+width-1) and reserves the approach on both sides.
    void open_door(bool vertical, int wall, int p, int width) {
        for (int t = 0; t < width; ++t) {
            int i = vertical ? wall : p + t;
            int j = vertical ? p + t : wall;
            cells_[idx(i, j)] = CellState::Free;
            for (int d = -2; d <= 2; ++d) {
                int ri = vertical ? wall + d : p + t;
                int rj = vertical ? p + t : wall + d;
                if (ri >= 0 && rj >= 0 && ri < w_ && rj < h_) reserved_[idx(ri, rj)] = 1;
            }
        }
    }

    bool door_fits(bool vertical, int wall, int p, int width) const {
        for (int t = 0; t < width; ++t) {
            int i = vertical ? wall : p + t;
            int j = vertical ? p + t : wall;
            if (cells_[idx(i, j)] != CellState::Occupied) return false;
            int ai = vertical ? wall - 1 : i, aj = vertical ? j : wall - 1;
            int bi = vertical ? wall + 1 : i, bj = vertical ? j : wall + 1;
            if (!free(ai, aj) || !free(bi, bj)) return false;
        }
        return true;
    }

    bool carve_door(const BspNode& node) {
        const Rect& r = node.rect;
        const int lo = node.vertical_wall ? r.y0 : r.x0;
        const int hi = (node.vertical_wall ? r.y1 : r.x1) - spec_.door_width + 1;
        std::vector<int> options;
        for (int p = lo; p <= hi; ++p)
            if (door_fits(node.vertical_wall, node.wall, p, spec_.door_width)) options.push_back(p);
        if (options.empty()) return false;
        int p = options[static_cast<std::size_t>(uniform(0, static_cast<int>(options.size()) - 1))];
        open_door(node.vertical_wall, node.wall, p, spec_.door_width);
        return true;
    }

    void carve_extra_door() {
        std::vector<std::pair<bool, int>> walls;
        for (const auto& n : nodes_)
            if (n.left >= 0) walls.emplace_back(n.vertical_wall, n.wall);
        if (walls.empty()) return;
        for (int attempt = 0; attempt < 16; ++attempt) {
            auto [vertical, wall] = walls[static_cast<std::size_t>(uniform(0, static_cast<int>(walls.size()) - 1))];
            int extent = vertical ? h_ : w_;
            int p = uniform(1, extent - 1 - spec_.door_width);
            if (door_fits(vertical, wall, p, spec_.door_width)) {
                open_door(vertical, wall, p, spec_.door_width);
                return;
            }
        }
    }

    bool furnish() {
        int next_id = 0;
        for (int leaf : leaves_) {
            const Rect room = nodes_[static_cast<std::size_t>(leaf)].rect;
            const RoomType& type =
                spec_.room_types[static_cast<std::size_t>(uniform(0, static_cast<int>(spec_.room_types.size()) - 1))];
            if (type.objects.empty()) continue;
            int count = uniform(type.min_objects, type.max_objects);
            std::vector<ObjectRule> rules = type.objects;
            std::shuffle(rules.begin(), rules.end(), rng_);
            int placed = 0;
            for (int k = 0; placed < count && k < static_cast<int>(rules.size()) * 2; ++k) {
                const ObjectRule& rule = rules[static_cast<std::size_t>(k) % rules.size()];
                if (place(room, rule, next_id)) {
                    ++next_id;
                    ++placed;
                }
            }
            if (placed < type.min_objects) return false;
        }
        return true;
    }

    bool place(const Rect& room, const ObjectRule& rule, int id) {
        for (int attempt = 0; attempt < 24; ++attempt) {
            // side: 0 south, 1 north, 2 west, 3 east
            int side = uniform(0, 3);
            bool along_x = side < 2;
            int fw = along_x ? rule.length : rule.depth;
            int fh = along_x ? rule.depth : rule.length;
            if (fw > room.w() - 2 || fh > room.h() - 2) continue;
            int x0, y0;
            if (rule.against_wall) {
                if (along_x) {
                    x0 = uniform(room.x0, room.x1 - fw + 1);
                    y0 = side == 0 ? room.y0 : room.y1 - fh + 1;
                } else {
                    y0 = uniform(room.y0, room.y1 - fh + 1);
                    x0 = side == 2 ? room.x0 : room.x1 - fw + 1;
                }
            } else {
                if (room.w() - fw - 2 < 1 || room.h() - fh - 2 < 1) continue;
                x0 = uniform(room.x0 + 1, room.x1 - fw);
                y0 = uniform(room.y0 + 1, room.y1 - fh);
            }
            std::vector<Cell> footprint;
            bool ok = true;
            for (int j = y0; j < y0 + fh && ok; ++j) {
                for (int i = x0; i < x0 + fw; ++i) {
                    // Keep a one-cell gap to other furniture and off door approaches.
                    if (!free(i, j) || reserved_[idx(i, j)]) {
                        ok = false;
                        break;
                    }
                    footprint.push_back({i, j});
                }
            }
            if (!ok) continue;
            for (int j = y0 - 1; j <= y0 + fh && ok; ++j)
                for (int i = x0 - 1; i <= x0 + fw && ok; ++i)
                    if (i >= 0 && j >= 0 && i < w_ && j < h_ && object_cell(i, j)) ok = false;
            if (!ok) continue;
            for (const Cell& c : footprint) cells_[idx(c.i, c.j)] = CellState::Occupied;
            auto anchor = choose_anchor_cell(w_, h_, cells_, footprint);
            if (!anchor || !free_space_connected(w_, h_, cells_)) {
                for (const Cell& c : footprint) cells_[idx(c.i, c.j)] = CellState::Free;
                continue;
            }
            for (const Cell& c : footprint) furniture_.insert(c);
            ObjectInstance obj;
            obj.id = id;
            obj.category = rule.category;
            obj.footprint = std::move(footprint);
            obj.anchor = {(anchor->i + 0.5) * spec_.cell_size, (anchor->j + 0.5) * spec_.cell_size};
            objects_.push_back(std::move(obj));
            return true;
        }
        return false;
    }

    bool object_cell(int i, int j) const { return furniture_.count(Cell{i, j}) > 0; }

    const WorldSpec& spec_;
    std::mt19937_64& rng_;
    int w_, h_;
    std::vector<CellState> cells_;
    std::vector<char> reserved_;
    std::vector<BspNode> nodes_;
    std::vector<int> leaves_;
    std::vector<ObjectInstance> objects_;
    std::set<Cell> furniture_;
};

}  // namespace detail

/// Builds a BSP room layout with doors and furniture. Pure function of (seed, spec).
inline FloorPlan generate_floorplan(std::uint64_t seed, const WorldSpec& spec = WorldSpec::defaults(),
                                    std::string id = {}) {
    if (spec.width < 2 * spec.min_room_side + 3 || spec.height < spec.min_room_side + 2 ||
        spec.cell_size <= 0.0 || spec.door_width < 2 || spec.min_rooms < 1 ||
        spec.max_rooms < spec.min_rooms) {
        throw Error(ErrorCode::SpecInfeasible, "world spec dimensions are infeasible");
    }
    for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
        detail::PlanBuilder builder(spec, rng);
        if (!builder.build()) continue;
        return FloorPlan(spec.width, spec.height, spec.cell_size, builder.cells(), builder.objects(),
                         seed, spec.palette(), std::move(id));
    }
    throw Error(ErrorCode::SpecInfeasible,
                "placement constraints unsatisfied after " + std::to_string(spec.max_retries) + " retries");
}

// ---------------------------------------------------------------------------
// Geodesics

/// Path cost as exact step counts; comparing by value never ties for distinct counts.
struct GridSteps {
    int straight = 0;
    int diagonal = 0;

    double units() const { return straight + diagonal * std::numbers::sqrt2; }
    friend bool operator==(const GridSteps&, const GridSteps&) = default;
};

inline constexpr int kNeighbourDi[8] = {1, -1, 0, 0, 1, 1, -1, -1};
inline constexpr int kNeighbourDj[8] = {0, 0, 1, -1, 1, -1, 1, -1};

/// 8-connected moves over Free cells; diagonals may not cut an occupied corner.
inline bool can_step(const FloorPlan& plan, Cell from, int k) {
    Cell to{from.i + kNeighbourDi[k], from.j + kNeighbourDj[k]};
    if (!plan.is_free(to)) return false;
    if (k >= 4) {
        if (!plan.is_free(Cell{from.i + kNeighbourDi[k], from.j}) ||
            !plan.is_free(Cell{from.i, from.j + kNeighbourDj[k]}))
            return false;
    }
    return true;
}

/// Geodesic distance in meters from a set of source cells to every cell (infinity if unreachable).
class DistanceField {
public:
    DistanceField() = default;

    DistanceField(const FloorPlan& plan, const std::vector<Cell>& sources)
        : width_(plan.width()), cell_size_(plan.cell_size()) {
        const std::size_t n = plan.cells().size();
        steps_.assign(n, GridSteps{});
        reached_.assign(n, 0);
        std::vector<char> done(n, 0);
        using Item = std::pair<double, std::size_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
        for (const Cell& s : sources) {
            if (!plan.is_free(s)) continue;
            std::size_t idx = plan.index(s);
            reached_[idx] = 1;
            steps_[idx] = {};
            open.emplace(0.0, idx);
        }
        while (!open.empty()) {
            auto [cost, idx] = open.top();
            open.pop();
            if (done[idx]) continue;
            done[idx] = 1;
            Cell c = plan.cell_of_index(idx);
            for (int k = 0; k < 8; ++k) {
                if (!can_step(plan, c, k)) continue;
                Cell nb{c.i + kNeighbourDi[k], c.j + kNeighbourDj[k]};
                std::size_t nidx = plan.index(nb);
                if (done[nidx]) continue;
                GridSteps cand = steps_[idx];
                (k < 4 ? cand.straight : cand.diagonal) += 1;
                if (!reached_[nidx] || cand.units() < steps_[nidx].units()) {
                    reached_[nidx] = 1;
                    steps_[nidx] = cand;
                    open.emplace(cand.units(), nidx);
                }
            }
        }
    }

    bool reachable(Cell c) const { return reached_[index(c)] != 0; }
    std::optional<GridSteps> steps(Cell c) const {
        if (!reachable(c)) return std::nullopt;
        return steps_[index(c)];
    }
    /// Meters, or +infinity when unreachable.
    double meters(Cell c) const {
        if (!reachable(c)) return std::numeric_limits<double>::infinity();
        return cell_size_ * steps_[index(c)].units();
    }

private:
    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.j) * width_ + c.i; }

    int width_ = 0;
    double cell_size_ = 0.25;
    std::vector<GridSteps> steps_;
    std::vector<char> reached_;
};

/// Shortest 8-connected path length over Free cells; nullopt means Unreachable.
inline std::optional<double> geodesic_distance(const FloorPlan& plan, Vec2 from, Vec2 to) {
    Cell a = plan.cell_at(from);
    Cell b = plan.cell_at(to);
    if (!plan.in_bounds(a) || !plan.in_bounds(b)) throw Error(ErrorCode::OutOfBounds, "geodesic endpoint outside grid");
    if (!plan.is_free(a) || !plan.is_free(b)) return std::nullopt;
    DistanceField field(plan, {a});
    if (!field.reachable(b)) return std::nullopt;
    return field.meters(b);
}

inline std::optional<double> geodesic_distance(const FloorPlan& plan, const Pose& from, Vec2 to) {
    return geodesic_distance(plan, position(from), to);
}

/// Distance field whose sources are the anchors of every instance of `category`.
inline DistanceField target_field(const FloorPlan& plan, const std::string& category) {
    std::vector<Cell> sources;
    for (const auto* obj : plan.instances_of(category)) sources.push_back(plan.cell_at(obj->anchor));
    return DistanceField(plan, sources);
}

// ---------------------------------------------------------------------------
// Episodes

struct Episode {
    std::string id;
    std::string floorplan_id;
    std::uint64_t seed = 0;
    Pose start;
    std::string target_category;
    double gt_path_length = 0.0;
};

struct EpisodeSpec {
    double min_start_distance = 2.0;
};

/// Samples a start uniformly over Free cells at least `min_start_distance` from every target.
inline Episode make_episode(const FloorPlan& plan, std::uint64_t seed, const std::string& target_category,
                            const EpisodeSpec& spec = {}) {
    if (plan.instances_of(target_category).empty())
        throw Error(ErrorCode::NoTarget, "no instance of '" + target_category + "'");
    DistanceField field = target_field(plan, target_category);
    std::vector<Cell> starts;
    for (std::size_t idx = 0; idx < plan.cells().size(); ++idx) {
        Cell c = plan.cell_of_index(idx);
        if (!plan.is_free(c)) continue;
        double d = field.meters(c);
        if (std::isfinite(d) && d >= spec.min_start_distance - 1e-9) starts.push_back(c);
    }
    if (starts.empty()) throw Error(ErrorCode::NoValidStart, "every free cell is too close to a target");
    std::mt19937_64 rng(mix_seed(seed, 0x5eed));
    Cell s = starts[std::uniform_int_distribution<std::size_t>(0, starts.size() - 1)(rng)];
    int heading_step = std::uniform_int_distribution<int>(0, 11)(rng);
    Vec2 p = plan.cell_center(s);
    Episode ep;
    ep.floorplan_id = plan.id();
    ep.seed = seed;
    ep.start = Pose(p.x, p.y, 30.0 * heading_step);
    ep.target_category = target_category;
    ep.gt_path_length = field.meters(s);
    return ep;
}

/// Draws `count` episodes with targets sampled from the categories present in the plan.
inline std::vector<Episode> generate_episodes(const FloorPlan& plan, int count, std::uint64_t seed,
                                              const EpisodeSpec& spec = {}) {
    std::set<std::string> present;
    for (const auto& obj : plan.objects()) present.insert(obj.category);
    if (present.empty()) throw Error(ErrorCode::SpecInfeasible, "floorplan has no objects to target");
    std::vector<std::string> cats(present.begin(), present.end());
    std::vector<Episode> out;
    std::mt19937_64 rng(mix_seed(seed, plan.seed()));
    for (int k = 0; k < count; ++k) {
        std::vector<std::string> order = cats;
        std::shuffle(order.begin(), order.end(), rng);
        std::optional<Episode> ep;
        for (const auto& cat : order) {
            try {
                ep = make_episode(plan, mix_seed(seed, static_cast<std::uint64_t>(k)), cat, spec);
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoValidStart) throw;
            }
        }
        if (!ep) throw Error(ErrorCode::NoValidStart, "no category admits a valid start");
        ep->id = plan.id() + "_ep" + std::to_string(k);
        out.push_back(std::move(*ep));
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON documents

inline constexpr int kWorldFormatVersion = 1;

inline void to_json(nlohmann::json& j, const Pose& p) {
    j = nlohmann::json{{"x", p.x}, {"y", p.y}, {"heading", p.heading}};
}
inline void from_json(const nlohmann::json& j, Pose& p) {
    p = Pose(j.at("x").get<double>(), j.at("y").get<double>(), j.at("heading").get<double>());
}

inline nlohmann::json floorplan_to_json(const FloorPlan& plan) {
    nlohmann::json rows = nlohmann::json::array();
    for (int j = 0; j < plan.height(); ++j) {
        std::string row(static_cast<std::size_t>(plan.width()), '.');
        for (int i = 0; i < plan.width(); ++i)
            if (plan.at({i, j}) == CellState::Occupied) row[static_cast<std::size_t>(i)] = '#';
        rows.push_back(std::move(row));
    }
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& obj : plan.objects()) {
        nlohmann::json fp = nlohmann::json::array();
        for (const Cell& c : obj.footprint) fp.push_back({c.i, c.j});
        objects.push_back({{"id", obj.id},
                           {"category", obj.category},
                           {"anchor", {obj.anchor.x, obj.anchor.y}},
                           {"footprint", std::move(fp)}});
    }
    return {{"format", "imaginenav.floorplan"},
            {"version", kWorldFormatVersion},
            {"id", plan.id()},
            {"seed", plan.seed()},
            {"cell_size", plan.cell_size()},
            {"width", plan.width()},
            {"height", plan.height()},
            {"origin", {plan.origin().x, plan.origin().y}},
            {"palette", plan.palette()},
            {"rows", std::move(rows)},
            {"objects", std::move(objects)}};
}

inline FloorPlan floorplan_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "imaginenav.floorplan" || j.value("version", 0) != kWorldFormatVersion)
        throw Error(ErrorCode::Format, "not a version-1 floorplan document");
    int w = j.at("width").get<int>();
    int h = j.at("height").get<int>();
    const auto& rows = j.at("rows");
    if (static_cast<int>(rows.size()) != h) throw Error(ErrorCode::Format, "row count mismatch");
    std::vector<CellState> cells;
    cells.reserve(static_cast<std::size_t>(w) * h);
    for (const auto& row : rows) {
        auto s = row.get<std::string>();
        if (static_cast<int>(s.size()) != w) throw Error(ErrorCode::Format, "row width mismatch");
        for (char ch : s) cells.push_back(ch == '#' ? CellState::Occupied : CellState::Free);
    }
    std::vector<ObjectInstance> objects;
    for (const auto& o : j.at("objects")) {
        ObjectInstance obj;
        obj.id = o.at("id").get<int>();
        obj.category = o.at("category").get<std::string>();
        obj.anchor = {o.at("anchor")[0].get<double>(), o.at("anchor")[1].get<double>()};
        for (const auto& c : o.at("footprint")) obj.footprint.push_back({c[0].get<int>(), c[1].get<int>()});
        objects.push_back(std::move(obj));
    }
    Vec2 origin{j.at("origin")[0].get<double>(), j.at("origin")[1].get<double>()};
    return FloorPlan(w, h, j.at("cell_size").get<double>(), std::move(cells), std::move(objects),
                     j.at("seed").get<std::uint64_t>(), j.at("palette").get<std::vector<std::string>>(),
                     j.value("id", std::string{}), origin);
}

inline nlohmann::json episode_to_json(const Episode& ep) {
    return {{"format", "imaginenav.episode"},
            {"version", kWorldFormatVersion},
            {"id", ep.id},
            {"floorplan_id", ep.floorplan_id},
            {"seed", ep.seed},
            {"start", ep.start},
            {"target_category", ep.target_category},
            {"gt_path_length", ep.gt_path_length}};
}

inline Episode episode_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "imaginenav.episode" || j.value("version", 0) != kWorldFormatVersion)
        throw Error(ErrorCode::Format, "not a version-1 episode document");
    Episode ep;
    ep.id = j.value("id", std::string{});
    ep.floorplan_id = j.at("floorplan_id").get<std::string>();
    ep.seed = j.at("seed").get<std::uint64_t>();
    ep.start = j.at("start").get<Pose>();
    ep.target_category = j.at("target_category").get<std::string>();
    ep.gt_path_length = j.at("gt_path_length").get<double>();
    return ep;
}

}  // namespace imaginenav
