#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "imaginenav/imaginenav.hpp"

namespace imaginenav::testing {

/// Builds a plan from rows drawn north at the top. '#' is wall, '.' is free, and any letter in
/// `legend` marks the footprint of one object instance of that category.
inline FloorPlan plan_from_ascii(const std::vector<std::string>& rows, const std::map<char, std::string>& legend = {},
                                 double cell_size = 0.25, const std::string& id = "test") {
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows.front().size());
    std::vector<CellState> cells(static_cast<std::size_t>(w) * h, CellState::Free);
    std::map<char, std::vector<Cell>> footprints;
    for (int r = 0; r < h; ++r) {
        const int j = h - 1 - r;
        for (int i = 0; i < w; ++i) {
            char ch = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)];
            if (ch == '.') continue;
            cells[static_cast<std::size_t>(j) * w + i] = CellState::Occupied;
            if (legend.count(ch)) footprints[ch].push_back({i, j});
        }
    }
    std::vector<ObjectInstance> objects;
    int next_id = 0;
    for (const auto& [ch, fp] : footprints) {
        ObjectInstance obj;
        obj.id = next_id++;
        obj.category = legend.at(ch);
        obj.footprint = fp;
        auto anchor = choose_anchor_cell(w, h, cells, fp);
        obj.anchor = anchor ? Vec2{(anchor->i + 0.5) * cell_size, (anchor->j + 0.5) * cell_size} : Vec2{};
        objects.push_back(std::move(obj));
    }
    return FloorPlan(w, h, cell_size, std::move(cells), std::move(objects), 0, {}, id);
}

/// Open room of `w` x `h` free cells surrounded by a one-cell wall.
inline FloorPlan open_room(int w, int h, double cell_size = 0.25) {
    std::vector<std::string> rows;
    rows.push_back(std::string(static_cast<std::size_t>(w + 2), '#'));
    for (int r = 0; r < h; ++r) rows.push_back("#" + std::string(static_cast<std::size_t>(w), '.') + "#");
    rows.push_back(std::string(static_cast<std::size_t>(w + 2), '#'));
    return plan_from_ascii(rows, {}, cell_size);
}

/// Random cell soup with a solid border, as used by the geodesic oracle.
inline FloorPlan random_plan(std::mt19937_64& rng, int w, int h, double wall_prob) {
    std::bernoulli_distribution wall(wall_prob);
    std::vector<CellState> cells(static_cast<std::size_t>(w) * h, CellState::Free);
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i)
            if (i == 0 || j == 0 || i == w - 1 || j == h - 1 || wall(rng))
                cells[static_cast<std::size_t>(j) * w + i] = CellState::Occupied;
    return FloorPlan(w, h, 0.25, std::move(cells), {}, 0, {}, "random");
}

inline std::vector<Cell> free_cells(const FloorPlan& plan) {
    std::vector<Cell> out;
    for (std::size_t k = 0; k < plan.cells().size(); ++k)
        if (plan.cells()[k] == CellState::Free) out.push_back(plan.cell_of_index(k));
    return out;
}

inline Pose center_pose(const FloorPlan& plan, Cell c, double heading) {
    Vec2 p = plan.cell_center(c);
    return {p.x, p.y, heading};
}

/// Fixed candidate set used by the recorded VLM exchange under tests/data/vlm.
inline std::vector<Candidate> golden_vlm_candidates() {
    FloorPlan plan = generate_floorplan(3);
    Pose agent = center_pose(plan, free_cells(plan)[120], 30.0);
    return make_candidates(plan, agent, WaypointSource{nullptr, 2.0}, ImaginationConfig{});
}

inline constexpr const char* kGoldenVlmTarget = "tv";
inline constexpr const char* kGoldenVlmModel = "gpt-4o-mini";

inline std::string golden_vlm_dir() { return std::string(IMAGINENAV_SOURCE_DIR) + "/tests/data/vlm"; }

}  // namespace imaginenav::testing
