#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "imaginenav/core.hpp"
#include "imaginenav/sensor.hpp"
#include "imaginenav/world.hpp"

namespace imaginenav {

enum class Action : std::uint8_t { Stop, MoveAhead, TurnLeft, TurnRight, LookUp, LookDown };

inline constexpr double kForwardStep = 0.25;
inline constexpr double kTurnAngle = 30.0;

inline std::string_view to_string(Action a) {
    switch (a) {
        case Action::Stop: return "Stop";
        case Action::MoveAhead: return "MoveAhead";
        case Action::TurnLeft: return "TurnLeft";
        case Action::TurnRight: return "TurnRight";
        case Action::LookUp: return "LookUp";
        case Action::LookDown: return "LookDown";
    }
    return "?";
}

inline Action action_from_string(std::string_view s) {
    for (Action a : {Action::Stop, Action::MoveAhead, Action::TurnLeft, Action::TurnRight, Action::LookUp,
                     Action::LookDown})
        if (to_string(a) == s) return a;
    throw Error(ErrorCode::Format, "unknown action '" + std::string(s) + "'");
}

struct StepResult {
    Pose pose;
    bool collided = false;
    std::optional<Cell> blocked;  // first non-free cell on the attempted segment
};

/// First non-free cell crossed by the segment from `from` of length `length` along `heading_deg`.
inline std::optional<Cell> first_blocked_cell(const FloorPlan& plan, Vec2 from, double heading_deg, double length) {
    if (!plan.is_free(from)) return plan.cell_at(from);
    RayHit hit = cast_ray(plan, from, heading_deg, length + 1e-9);
    if (hit.cell && hit.distance <= length + 1e-9) return hit.cell;
    return std::nullopt;
}

/// Applies one discrete action. MoveAhead is rejected if any cell along the step is occupied.
inline StepResult step(const FloorPlan& plan, const Pose& pose, Action action) {
    switch (action) {
        case Action::MoveAhead: {
            double rad = deg2rad(pose.heading);
            Vec2 target{pose.x + kForwardStep * std::cos(rad), pose.y + kForwardStep * std::sin(rad)};
            auto blocked = first_blocked_cell(plan, position(pose), pose.heading, kForwardStep);
            if (!blocked && !plan.is_free(target)) blocked = plan.cell_at(target);
            if (blocked) return {pose, true, blocked};
            return {Pose(target.x, target.y, pose.heading), false, std::nullopt};
        }
        case Action::TurnLeft: return {pose.rotated(kTurnAngle), false, std::nullopt};
        case Action::TurnRight: return {pose.rotated(-kTurnAngle), false, std::nullopt};
        case Action::Stop:
        case Action::LookUp:
        case Action::LookDown: return {pose, false, std::nullopt};
    }
    return {pose, false, std::nullopt};
}

// ---------------------------------------------------------------------------
// Egocentric memory

enum class MemoryCell : std::uint8_t { Unknown, SeenFree, SeenOccupied };

class OccupancyMemory {
public:
    OccupancyMemory() = default;
    explicit OccupancyMemory(const FloorPlan& plan)
        : width_(plan.width()), height_(plan.height()), cell_size_(plan.cell_size()), origin_(plan.origin()),
          cells_(static_cast<std::size_t>(plan.width()) * plan.height(), MemoryCell::Unknown) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool in_bounds(Cell c) const { return c.i >= 0 && c.j >= 0 && c.i < width_ && c.j < height_; }
    MemoryCell at(Cell c) const {
        return in_bounds(c) ? cells_[index(c)] : MemoryCell::SeenOccupied;
    }
    Cell cell_at(Vec2 p) const {
        return {static_cast<int>(std::floor((p.x - origin_.x) / cell_size_)),
                static_cast<int>(std::floor((p.y - origin_.y) / cell_size_))};
    }
    Vec2 cell_center(Cell c) const {
        return {origin_.x + (c.i + 0.5) * cell_size_, origin_.y + (c.j + 0.5) * cell_size_};
    }
    double cell_size() const { return cell_size_; }
    Vec2 origin() const { return origin_; }

    void mark_free(Cell c) {
        if (in_bounds(c) && cells_[index(c)] == MemoryCell::Unknown) cells_[index(c)] = MemoryCell::SeenFree;
    }
    void mark_occupied(Cell c) {
        if (in_bounds(c) && cells_[index(c)] == MemoryCell::Unknown) cells_[index(c)] = MemoryCell::SeenOccupied;
    }

    /// Integrates a view using only its rays: traversed cells become free, hit cells occupied.
    void update(const View& view) {
        const Vec2 origin = position(view.pose);
        mark_free(cell_at(origin));
        for (int c = 0; c < view.width(); ++c) {
            const Ray& ray = view.rays[static_cast<std::size_t>(c)];
            const bool hit = ray.depth < view.max_range - 1e-9;
            traverse(origin, view.column_heading(c), ray.depth, hit);
        }
    }

    std::size_t count(MemoryCell state) const {
        return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), state));
    }
    const std::vector<MemoryCell>& cells() const { return cells_; }

private:
    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.j) * width_ + c.i; }

    void traverse(Vec2 origin, double heading_deg, double depth, bool hit) {
        const double gx = (origin.x - origin_.x) / cell_size_;
        const double gy = (origin.y - origin_.y) / cell_size_;
        const double dx = std::cos(deg2rad(heading_deg));
        const double dy = std::sin(deg2rad(heading_deg));
        int i = static_cast<int>(std::floor(gx));
        int j = static_cast<int>(std::floor(gy));
        const int si = dx > 0 ? 1 : -1;
        const int sj = dy > 0 ? 1 : -1;
        const double inf = std::numeric_limits<double>::infinity();
        const double ddx = std::fabs(dx) < 1e-12 ? inf : 1.0 / std::fabs(dx);
        const double ddy = std::fabs(dy) < 1e-12 ? inf : 1.0 / std::fabs(dy);
        double tx = std::fabs(dx) < 1e-12 ? inf : (dx > 0 ? (i + 1 - gx) : (gx - i)) * ddx;
        double ty = std::fabs(dy) < 1e-12 ? inf : (dy > 0 ? (j + 1 - gy) : (gy - j)) * ddy;
        // A clamped depth means the ray hit the first cell it entered.
        const double limit = depth <= kMinRayDepth ? 0.0 : depth / cell_size_;
        while (true) {
            double t;
            if (tx < ty) {
                t = tx;
                tx += ddx;
                i += si;
            } else {
                t = ty;
                ty += ddy;
                j += sj;
            }
            if (!in_bounds({i, j})) return;
            if (t >= limit - 1e-6) {
                if (hit && t <= limit + 1e-6) mark_occupied({i, j});
                return;
            }
            mark_free({i, j});
        }
    }

    int width_ = 0;
    int height_ = 0;
    double cell_size_ = 0.25;
    Vec2 origin_;
    std::vector<MemoryCell> cells_;
};

// ---------------------------------------------------------------------------
// Path following

struct ActionRecord {
    Action action = Action::Stop;
    bool collided = false;

    friend bool operator==(const ActionRecord&, const ActionRecord&) = default;
};

/// Meters travelled according to an action log: successful MoveAheads only.
inline double path_length_from_log(const std::vector<ActionRecord>& log) {
    std::size_t moves = 0;
    for (const auto& r : log)
        if (r.action == Action::MoveAhead && !r.collided) ++moves;
    return kForwardStep * static_cast<double>(moves);
}

namespace detail {

/// Turn toward `target` unless already within `tolerance` degrees, then move.
inline Action steer_toward(const Pose& pose, Vec2 target, double tolerance = 15.0) {
    double desired = rad2deg(std::atan2(target.y - pose.y, target.x - pose.x));
    double err = wrap_angle(desired - pose.heading);
    if (err > tolerance) return Action::TurnLeft;
    if (err < -tolerance) return Action::TurnRight;
    return Action::MoveAhead;
}

/// Picks the reachable heading (in turn increments) closest to the bearing of `target`
/// whose forward step is clear and gets closer to it, then turns toward that heading or
/// moves. The choice depends on position only, so turning cannot oscillate.
template <typename StepClear>
Action choose_action(const Pose& pose, Vec2 target, StepClear&& step_clear) {
    const double bearing = rad2deg(std::atan2(target.y - pose.y, target.x - pose.x));
    const double here = distance(position(pose), target);
    std::vector<std::pair<double, double>> options;  // (angular error, heading)
    for (int k = 0; k < 12; ++k) {
        double h = normalize_heading(pose.heading + kTurnAngle * k);
        options.emplace_back(std::fabs(wrap_angle(h - bearing)), h);
    }
    std::stable_sort(options.begin(), options.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    // Second pass only when the target is within one step: allow overshooting it.
    for (bool need_progress : {true, false}) {
        if (!need_progress && here >= kForwardStep) break;
        for (const auto& [err, h] : options) {
            if (err > 90.0) break;
            double rad = deg2rad(h);
            Vec2 next{pose.x + kForwardStep * std::cos(rad), pose.y + kForwardStep * std::sin(rad)};
            if (need_progress && distance(next, target) >= here - 1e-9) continue;
            if (!step_clear(position(pose), h)) continue;
            double turn = wrap_angle(h - pose.heading);
            if (std::fabs(turn) < 1e-6) return Action::MoveAhead;
            return turn > 0 ? Action::TurnLeft : Action::TurnRight;
        }
    }
    return steer_toward(pose, target, 0.0) == Action::TurnRight ? Action::TurnRight : Action::TurnLeft;
}

/// Furthest path index (up to `max_ahead` past `from_idx`) whose straight segment is passable.
template <typename Passable>
std::size_t lookahead_index(const std::vector<Vec2>& path, std::size_t from_idx, Vec2 pos, std::size_t max_ahead,
                            double cell_size, Passable&& passable) {
    std::size_t best = std::min(from_idx + 1, path.size() - 1);
    for (std::size_t k = best; k < path.size() && k <= from_idx + max_ahead; ++k) {
        double len = distance(pos, path[k]);
        int samples = std::max(2, static_cast<int>(std::ceil(len / (cell_size * 0.25))));
        bool clear = true;
        for (int s = 1; s <= samples && clear; ++s) {
            double t = static_cast<double>(s) / samples;
            clear = passable(Vec2{pos.x + (path[k].x - pos.x) * t, pos.y + (path[k].y - pos.y) * t});
        }
        if (!clear) break;
        best = k;
    }
    return best;
}

inline std::size_t nearest_index(const std::vector<Vec2>& path, Vec2 pos) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < path.size(); ++k) {
        double d = distance(path[k], pos);
        if (d < best_d - 1e-12) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

}  // namespace detail

/// A forward step is clear in memory unless it crosses a cell already seen occupied.
inline bool memory_step_clear(const OccupancyMemory& memory, Vec2 from, double heading_deg) {
    auto seen_wall = [&](Cell c) { return !memory.in_bounds(c) || memory.at(c) == MemoryCell::SeenOccupied; };
    if (seen_wall(memory.cell_at(from))) return false;
    RayHit hit = march_grid(memory.cell_size(), memory.origin(), from, heading_deg, kForwardStep + 1e-9, seen_wall);
    return !(hit.cell && hit.distance <= kForwardStep + 1e-9);
}

struct NavigateParams {
    double reach_radius = 0.5;
    double unknown_cost = 1.5;
    int replan_interval = 5;
    RenderParams render;
};

struct NavigateResult {
    std::vector<ActionRecord> actions;
    std::vector<Pose> poses;  // pose after each action
    Pose final_pose;
    bool reached = false;
    bool interrupted = false;

    double path_length() const { return path_length_from_log(actions); }
};

/// Called after every action with the new pose and its forward view; returning true aborts navigation.
using ActionHook = std::function<bool(const Pose&, const View&)>;

/// Shortest path over the memory grid. Unknown cells cost `unknown_cost`; seen obstacles are impassable.
inline std::optional<std::vector<Cell>> plan_on_memory(const OccupancyMemory& memory, Cell start,
                                                       const std::function<bool(Cell)>& is_goal,
                                                       double unknown_cost) {
    if (!memory.in_bounds(start)) return std::nullopt;
    const std::size_t n = static_cast<std::size_t>(memory.width()) * memory.height();
    auto index = [&](Cell c) { return static_cast<std::size_t>(c.j) * memory.width() + c.i; };
    auto passable = [&](Cell c) { return memory.in_bounds(c) && memory.at(c) != MemoryCell::SeenOccupied; };
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<std::int64_t> parent(n, -1);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    dist[index(start)] = 0.0;
    open.emplace(0.0, index(start));
    while (!open.empty()) {
        auto [d, idx] = open.top();
        open.pop();
        if (d > dist[idx]) continue;
        Cell c{static_cast<int>(idx % memory.width()), static_cast<int>(idx / memory.width())};
        if (is_goal(c)) {
            std::vector<Cell> path;
            for (std::int64_t k = static_cast<std::int64_t>(idx); k >= 0; k = parent[static_cast<std::size_t>(k)])
                path.push_back({static_cast<int>(k % memory.width()), static_cast<int>(k / memory.width())});
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (int k = 0; k < 8; ++k) {
            Cell nb{c.i + kNeighbourDi[k], c.j + kNeighbourDj[k]};
            if (!passable(nb)) continue;
            if (k >= 4 && (!passable({nb.i, c.j}) || !passable({c.i, nb.j}))) continue;
            double w = (k < 4 ? 1.0 : std::numbers::sqrt2) *
                       (memory.at(nb) == MemoryCell::Unknown ? unknown_cost : 1.0);
            std::size_t nidx = index(nb);
            if (d + w < dist[nidx]) {
                dist[nidx] = d + w;
                parent[nidx] = static_cast<std::int64_t>(idx);
                open.emplace(d + w, nidx);
            }
        }
    }
    return std::nullopt;
}

/// Drives toward a world-frame goal with discrete actions, mapping as it goes.
inline NavigateResult navigate_to(const FloorPlan& plan, const Pose& start, Vec2 goal, OccupancyMemory& memory,
                                  int budget, const NavigateParams& params = {}, const ActionHook& hook = {}) {
    NavigateResult out;
    out.final_pose = start;
    if (budget < 1) return out;
    Pose pose = start;
    const double cs = plan.cell_size();
    const Cell goal_cell = memory.cell_at(goal);

    auto goal_open = [&] { return memory.in_bounds(goal_cell) && memory.at(goal_cell) != MemoryCell::SeenOccupied; };
    auto is_goal = [&](Cell c) {
        if (goal_open()) return c == goal_cell;
        return distance(memory.cell_center(c), goal) <= params.reach_radius + 1e-9;
    };
    auto arrived = [&] {
        Cell c = memory.cell_at(position(pose));
        return is_goal(c) || distance(position(pose), goal) <= kForwardStep * 0.6;
    };

    memory.update(render_view(plan, pose, params.render));
    std::vector<Vec2> path;
    std::vector<Cell> path_cells;
    int since_plan = params.replan_interval;
    bool force_replan = true;
    int hovering = 0;

    while (static_cast<int>(out.actions.size()) < budget && !arrived()) {
        bool path_blocked = std::any_of(path_cells.begin(), path_cells.end(),
                                        [&](Cell c) { return memory.at(c) == MemoryCell::SeenOccupied; });
        if (force_replan || path_blocked || since_plan >= params.replan_interval) {
            auto planned = plan_on_memory(memory, memory.cell_at(position(pose)), is_goal, params.unknown_cost);
            if (!planned) break;  // no route even through unknown space
            path_cells = std::move(*planned);
            path.clear();
            for (Cell c : path_cells) path.push_back(memory.cell_center(c));
            since_plan = 0;
            force_replan = false;
        }
        if (path.size() < 2) {
            path.push_back(goal_open() ? memory.cell_center(goal_cell) : goal);
        }
        std::size_t at = detail::nearest_index(path, position(pose));
        std::size_t ahead = detail::lookahead_index(path, at, position(pose), 4, cs, [&](Vec2 p) {
            return memory.at(memory.cell_at(p)) != MemoryCell::SeenOccupied;
        });
        Action action = detail::choose_action(pose, path[ahead], [&](Vec2 from, double h) {
            return memory_step_clear(memory, from, h);
        });
        StepResult res = step(plan, pose, action);
        if (res.collided) {
            if (res.blocked) memory.mark_occupied(*res.blocked);
            force_replan = true;
        }
        pose = res.pose;
        out.actions.push_back({action, res.collided});
        out.poses.push_back(pose);
        ++since_plan;

        View view = render_view(plan, pose, params.render);
        memory.update(view);
        if (hook && hook(pose, view)) {
            out.interrupted = true;
            break;
        }
        // Circling just outside the goal cell: accept once inside the reach radius for a while.
        hovering = distance(position(pose), goal) <= params.reach_radius ? hovering + 1 : 0;
        if (hovering >= 6) break;
    }
    out.final_pose = pose;
    out.reached = distance(position(pose), goal) <= params.reach_radius + 1e-9;
    return out;
}

// ---------------------------------------------------------------------------
// Scripted expert

struct ExpertTrajectory {
    std::vector<Pose> poses;  // pose at every step, starting with the spawn pose
    std::vector<Action> actions;
    bool arrived = false;
};

/// Shortest-path follower with ground-truth map access. Headings are smoothed by
/// committing to the current one while it stays clear, keeps descending the distance
/// field and is within `commit_tolerance` degrees of a line-of-sight lookahead point.
class ExpertPolicy {
public:
    ExpertPolicy() = default;
    ExpertPolicy(int lookahead_cells, double commit_tolerance)
        : lookahead_(lookahead_cells), commit_tolerance_(commit_tolerance) {}

    int lookahead() const { return lookahead_; }
    double commit_tolerance() const { return commit_tolerance_; }

    ExpertTrajectory run(const FloorPlan& plan, const Pose& start, const DistanceField& field, int max_steps) const {
        ExpertTrajectory traj;
        traj.poses.push_back(start);
        Pose pose = start;
        auto clear = [&](Vec2 from, double h) { return !first_blocked_cell(plan, from, h, kForwardStep); };
        for (int t = 0; t < max_steps; ++t) {
            Cell here = plan.cell_at(position(pose));
            if (field.meters(here) <= plan.cell_size() + 1e-9) {
                traj.arrived = true;
                break;
            }
            std::vector<Vec2> path = descend(plan, here, field);
            if (path.size() < 2) break;
            std::size_t ahead = detail::lookahead_index(path, 0, position(pose), static_cast<std::size_t>(lookahead_),
                                                        plan.cell_size(), [&](Vec2 p) { return plan.is_free(p); });
            const Vec2 aim = path[ahead];
            Action action;
            if (keep_heading(plan, pose, aim, field, clear)) action = Action::MoveAhead;
            else action = detail::choose_action(pose, aim, clear);
            StepResult res = step(plan, pose, action);
            pose = res.pose;
            traj.actions.push_back(action);
            traj.poses.push_back(pose);
        }
        return traj;
    }

private:
    template <typename Clear>
    bool keep_heading(const FloorPlan& plan, const Pose& pose, Vec2 aim, const DistanceField& field,
                      Clear&& clear) const {
        double bearing = rad2deg(std::atan2(aim.y - pose.y, aim.x - pose.x));
        if (std::fabs(wrap_angle(bearing - pose.heading)) > commit_tolerance_) return false;
        if (!clear(position(pose), pose.heading)) return false;
        double rad = deg2rad(pose.heading);
        Vec2 next{pose.x + kForwardStep * std::cos(rad), pose.y + kForwardStep * std::sin(rad)};
        if (field.meters(plan.cell_at(next)) > field.meters(plan.cell_at(position(pose))) + 1e-9) return false;
        return distance(next, aim) < distance(position(pose), aim);
    }

    /// Steepest descent along the distance field, as cell centers.
    std::vector<Vec2> descend(const FloorPlan& plan, Cell from, const DistanceField& field) const {
        std::vector<Vec2> path{plan.cell_center(from)};
        Cell c = from;
        for (int n = 0; n < lookahead_ + 1; ++n) {
            double best = field.meters(c);
            std::optional<Cell> next;
            for (int k = 0; k < 8; ++k) {
                if (!can_step(plan, c, k)) continue;
                Cell nb{c.i + kNeighbourDi[k], c.j + kNeighbourDj[k]};
                double d = field.meters(nb);
                if (d < best - 1e-9) {
                    best = d;
                    next = nb;
                }
            }
            if (!next) break;
            c = *next;
            path.push_back(plan.cell_center(c));
        }
        return path;
    }

    int lookahead_ = 20;
    double commit_tolerance_ = 90.0;
};

}  // namespace imaginenav
