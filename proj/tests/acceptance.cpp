// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any criterion fails.

#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <queue>
#include <random>
#include <sstream>

#include "support.hpp"

namespace imaginenav {
namespace {

namespace fs = std::filesystem;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 3) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// 1. Geodesic distance against a textbook Dijkstra over the 8-connected grid

std::optional<double> dijkstra_oracle(const FloorPlan& p, Cell a, Cell b) {
    const int w = p.width(), h = p.height();
    if (!p.is_free(a) || !p.is_free(b)) return std::nullopt;
    // Distances are kept as (straight, diagonal) step counts so equal lengths compare exactly.
    using Key = std::pair<double, std::pair<int, int>>;
    std::vector<std::pair<int, int>> best(static_cast<std::size_t>(w) * h, {-1, -1});
    auto len = [](std::pair<int, int> s) { return s.first + s.second * std::numbers::sqrt2; };
    auto idx = [&](Cell c) { return static_cast<std::size_t>(c.j) * w + c.i; };
    std::priority_queue<std::pair<Key, std::size_t>, std::vector<std::pair<Key, std::size_t>>, std::greater<>> q;
    best[idx(a)] = {0, 0};
    q.push({{0.0, {0, 0}}, idx(a)});
    while (!q.empty()) {
        auto [key, k] = q.top();
        q.pop();
        if (key.second != best[k]) continue;
        Cell c{static_cast<int>(k % w), static_cast<int>(k / w)};
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
                if (!di && !dj) continue;
                Cell n{c.i + di, c.j + dj};
                if (n.i < 0 || n.j < 0 || n.i >= w || n.j >= h || !p.is_free(n)) continue;
                if (di && dj && (!p.is_free(Cell{c.i + di, c.j}) || !p.is_free(Cell{c.i, c.j + dj}))) continue;
                auto s = key.second;
                (di && dj ? s.second : s.first) += 1;
                auto& cur = best[idx(n)];
                if (cur.first < 0 || len(s) < len(cur) - 1e-12) {
                    cur = s;
                    q.push({{len(s), s}, idx(n)});
                }
            }
    }
    auto s = best[idx(b)];
    if (s.first < 0) return std::nullopt;
    return p.cell_size() * len(s);
}

Outcome geodesic_oracle() {
    std::mt19937_64 rng(2024);
    int pairs = 0, mismatches = 0;
    for (int plan = 0; plan < 100; ++plan) {
        FloorPlan p = testing::random_plan(rng, 32, 32, 0.3);
        auto cells = testing::free_cells(p);
        if (cells.size() < 2) continue;
        std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
        for (int k = 0; k < 10; ++k) {
            Cell a = cells[pick(rng)], b = cells[pick(rng)];
            auto got = geodesic_distance(p, p.cell_center(a), p.cell_center(b));
            auto want = dijkstra_oracle(p, a, b);
            ++pairs;
            if (got.has_value() != want.has_value() || (got && *got != *want)) ++mismatches;
        }
    }
    return {mismatches == 0, std::to_string(pairs) + " pairs, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------------------
// 2. SPL

EpisodeResult outcome(bool s, double p, double l) {
    EpisodeResult r;
    r.episode_id = "e";
    r.success = s;
    r.path_length = p;
    r.gt_length = l;
    return r;
}

Outcome spl_checks() {
    bool ok = spl({outcome(true, 8.0, 4.0)}) == 0.5 && spl({outcome(true, 2.0, 4.0)}) == 1.0 &&
              spl({outcome(false, 3.0, 4.0), outcome(false, 1.0, 1.0)}) == 0.0;
    std::mt19937_64 rng(1000);
    std::uniform_real_distribution<double> len(0.1, 40.0);
    int bad = 0;
    for (int set = 0; set < 1000; ++set) {
        std::vector<EpisodeResult> rs;
        int n = 1 + static_cast<int>(rng() % 30);
        for (int k = 0; k < n; ++k) rs.push_back(outcome(rng() % 2, len(rng), len(rng)));
        double s = spl(rs);
        if (!(s >= 0.0 && s <= 1.0 && s <= success_rate(rs) + 1e-12)) ++bad;
    }
    return {ok && bad == 0, std::string("trivial cases ") + (ok ? "ok" : "wrong") + ", " + std::to_string(bad) +
                                " of 1000 fuzzed sets out of bounds"};
}

// ---------------------------------------------------------------------------
// 3. Demonstration filters and training quality

Outcome demos_and_training() {
    ModelRecipe recipe;
    Benchmark b = make_benchmark(recipe.demos);
    DemoCollection d = collect_demos(b.plans, b.episodes, recipe.expert, recipe.collect);
    std::size_t violations = 0;
    for (const DemoPair& pr : d.pairs)
        if (pr.view.min_depth() < kMinFrameDepth || std::fabs(pr.target.theta) > kMaxTurn + 1e-9) ++violations;
    FeatureSpec fs;
    fs.max_range = recipe.collect.render.max_range;
    fs.palette = recipe.demos.world.palette();
    WaypointModel m = train(d.pairs, fs, recipe.hyper);
    const TrainReport& r = m.report();
    double ratio = r.test_mse / r.baseline_test_mse;
    return {violations == 0 && ratio <= 0.5,
            std::to_string(d.pairs.size()) + " pairs, " + std::to_string(violations) + " filter violations, test/baseline MSE " +
                fmt(r.test_mse) + "/" + fmt(r.baseline_test_mse) + " = " + fmt(ratio) + " (need <= 0.5)"};
}

// ---------------------------------------------------------------------------
// Shared evaluation state for 4, 5 and 9

struct Ablation {
    std::map<std::string, Report> reports;
};

const WaypointModel& default_model() {
    static const WaypointModel m = build_model(ModelRecipe{}, kDefaultSamplingStep);
    return m;
}

const Benchmark& fixed_benchmark() {
    static const Benchmark b = make_benchmark(BenchmarkSpec{});
    return b;
}

const Ablation& ablation() {
    static const Ablation a = [] {
        Ablation out;
        const Benchmark& b = fixed_benchmark();
        for (const RunConfig& cfg : ablation_variants(RunConfig{}))
            out.reports[cfg.name] = evaluate(b.plans, b.episodes, &default_model(), cfg, offline_scorer_factory(cfg));
        return out;
    }();
    return a;
}

std::string sr_of(const std::string& name) { return name + " " + fmt(ablation().reports.at(name).sr, 2); }

Outcome oracle_ordering() {
    const auto& r = ablation().reports;
    double w2i = r.at("w2i_oracle").sr, hop = r.at("fixed_hop_oracle").sr, none = r.at("no_imagination").sr;
    return {w2i > hop && hop > none,
            std::to_string(fixed_benchmark().episodes.size()) + " episodes: " + sr_of("w2i_oracle") + ", " +
                sr_of("fixed_hop_oracle") + ", " + sr_of("no_imagination") + "; margins " + fmt(w2i - hop, 2) + ", " +
                fmt(hop - none, 2)};
}

Outcome corruption_ordering() {
    const auto& r = ablation().reports;
    double a = r.at("w2i_corrupted").sr, b = r.at("w2i_oracle").sr;
    double c = r.at("fixed_hop_corrupted").sr, d = r.at("fixed_hop_oracle").sr;
    return {a < b && c < d, sr_of("w2i_corrupted") + " < " + sr_of("w2i_oracle") + "; " + sr_of("fixed_hop_corrupted") +
                                " < " + sr_of("fixed_hop_oracle")};
}

// ---------------------------------------------------------------------------
// 6. Sampling-step sweep

Outcome sweep_harness() {
    const std::vector<int> Ts{8, 10, 11, 12, 15};
    auto scorers = [](const RunConfig& c) { return offline_scorer_factory(c); };
    auto first = sweep_T(fixed_benchmark(), RunConfig{}, ModelRecipe{}, Ts, scorers);
    auto second = sweep_T(fixed_benchmark(), RunConfig{}, ModelRecipe{}, Ts, scorers);
    bool complete = first.size() == Ts.size();
    for (std::size_t k = 0; complete && k < Ts.size(); ++k)
        complete = first[k].T == Ts[k] && first[k].episodes == fixed_benchmark().episodes.size();
    bool same = table_to_json(first).dump() == table_to_json(second).dump();
    std::string rows;
    for (const auto& r : first) rows += " T" + std::to_string(r.T) + "=" + fmt(r.sr, 2);
    return {complete && same, std::string(complete ? "complete" : "incomplete") + ", " +
                                  (same ? "identical on rerun" : "differs on rerun") + ";" + rows};
}

// ---------------------------------------------------------------------------
// 7. VLM protocol through the recorded exchange

class ScriptedTransport : public VlmTransport {
public:
    explicit ScriptedTransport(std::deque<HttpReply> script) : script_(std::move(script)) {}
    HttpReply post(const std::string& body) override {
        bodies.push_back(body);
        if (script_.empty()) throw Error(ErrorCode::Transport, "script exhausted");
        HttpReply r = script_.front();
        script_.pop_front();
        return r;
    }
    std::string name() const override { return "replay"; }
    std::vector<std::string> bodies;

private:
    std::deque<HttpReply> script_;
};

std::string chat_reply(const std::string& content) {
    return nlohmann::json{{"choices", {{{"message", {{"content", content}}}}}}}.dump();
}

Outcome vlm_protocol() {
    std::vector<std::string> failures;
    const auto cands = testing::golden_vlm_candidates();
    const std::string target = testing::kGoldenVlmTarget;
    const std::string body = build_vlm_request(cands, target, testing::kGoldenVlmModel);
    if (body != build_vlm_request(testing::golden_vlm_candidates(), target, testing::kGoldenVlmModel))
        failures.push_back("request bytes differ between identical builds");
    std::ifstream sha_in(fs::path(testing::golden_vlm_dir()) / "request_sha256.txt");
    std::string golden_sha;
    sha_in >> golden_sha;
    if (golden_sha != sha256_hex(body)) failures.push_back("request differs from the recorded golden");

    VlmSettings s;
    s.model = testing::kGoldenVlmModel;
    s.backoff_seconds = 0.0;
    FloorPlan plan = generate_floorplan(3);
    VisitGrid visits(plan);
    try {
        ReplayTransport replay((fs::path(testing::golden_vlm_dir()) / "replay").string());
        Decision d = score_vlm(cands, target, s, replay, visits);
        if (d.choice != "C" || d.scorer_id != "replay") failures.push_back("replayed decision is " + d.choice);
    } catch (const Error& e) {
        failures.push_back(std::string("replay failed: ") + e.what());
    }

    const HttpReply bad{200, chat_reply("{\"Choice\": \"Q\"}")};
    ScriptedTransport three_bad({bad, bad, bad});
    Decision fb = score_vlm(cands, target, s, three_bad, visits);
    if (fb.scorer_id != "fallback" || three_bad.bodies.size() != 3 ||
        fb.choice != score_heuristic(cands, target, visits).choice)
        failures.push_back("three malformed replies did not fall back after three attempts");
    if (three_bad.bodies.size() == 3 && three_bad.bodies[1].find("could not be used") == std::string::npos)
        failures.push_back("retry lacks the format reminder");

    std::mt19937_64 rng(7);
    const std::string alphabet = "ABCDEFGXYZabf{}\":, ChoiceReason";
    int outside = 0;
    const int fuzz_replies = 200;
    for (int k = 0; k < fuzz_replies; ++k) {
        std::string text = "{\"Reason\": \"r\", \"Choice\": \"";
        for (int c = 0, n = static_cast<int>(rng() % 3); c < n; ++c) text += alphabet[rng() % alphabet.size()];
        text += "\"}";
        ScriptedTransport t({HttpReply{200, chat_reply(text)}, bad, bad});
        Decision d = score_vlm(cands, target, s, t, visits);
        if (d.choice.size() != 1 || d.choice[0] < 'A' || d.choice[0] > 'F') ++outside;
    }
    if (outside) failures.push_back(std::to_string(outside) + " fuzzed decisions outside A..F");

    std::string detail = "golden sha " + golden_sha.substr(0, 12) + "..., fallback after " +
                         std::to_string(three_bad.bodies.size()) + " attempts, " + std::to_string(fuzz_replies) +
                         " fuzzed replies";
    for (const auto& f : failures) detail += "; " + f;
    return {failures.empty(), detail};
}

// ---------------------------------------------------------------------------
// 8. Determinism of full evaluations

Outcome end_to_end_determinism() {
    BenchmarkSpec spec;
    spec.episodes_per_world = 10;
    Benchmark b = make_benchmark(spec);
    RunConfig cfg;
    auto run = [&] {
        auto t0 = std::chrono::steady_clock::now();
        Report r = evaluate(b.plans, b.episodes, &default_model(), cfg, offline_scorer_factory(cfg));
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ostringstream traj;
        for (const auto& e : r.results) write_trajectory_jsonl(traj, e);
        return std::make_tuple(report_to_json(r).dump(), traj.str(), secs);
    };
    auto [rep1, traj1, t1] = run();
    auto [rep2, traj2, t2] = run();
    bool same = rep1 == rep2 && traj1 == traj2;
    return {same, std::to_string(b.episodes.size()) + " episodes, reports " + (same ? "bit-identical" : "differ") +
                      ", " + fmt(t1, 1) + " s and " + fmt(t2, 1) + " s"};
}

// ---------------------------------------------------------------------------
// 9. No-clip and budget invariants

Outcome clip_and_budget() {
    std::mt19937_64 rng(99);
    const Action actions[] = {Action::MoveAhead, Action::MoveAhead, Action::TurnLeft, Action::TurnRight, Action::Stop};
    long clipped = 0, steps = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        FloorPlan p = generate_floorplan(seed);
        auto cells = testing::free_cells(p);
        std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int walk = 0; walk < 10; ++walk) {
            Cell c = cells[pick(rng)];
            Pose pose{(c.i + unit(rng)) * p.cell_size(), (c.j + unit(rng)) * p.cell_size(), 360.0 * unit(rng)};
            for (int t = 0; t < 1000; ++t, ++steps) {
                pose = step(p, pose, actions[rng() % 5]).pose;
                if (!p.is_free(position(pose))) ++clipped;
            }
        }
    }
    std::size_t episodes = 0, over_budget = 0, inconsistent = 0, off_grid = 0;
    std::map<std::string, const FloorPlan*> plans;
    for (const auto& p : fixed_benchmark().plans) plans[p.id()] = &p;
    for (const auto& [name, rep] : ablation().reports)
        for (const auto& r : rep.results) {
            ++episodes;
            if (r.steps > 500 || r.actions.size() != static_cast<std::size_t>(r.steps)) ++over_budget;
            if (r.path_length != path_length_from_log(r.actions)) ++inconsistent;
            for (const Pose& pose : r.trajectory)
                if (!plans.at(r.floorplan_id)->is_free(position(pose))) {
                    ++off_grid;
                    break;
                }
        }
    bool ok = clipped == 0 && over_budget == 0 && inconsistent == 0 && off_grid == 0;
    return {ok, std::to_string(steps) + " fuzzed steps with " + std::to_string(clipped) + " in walls; " +
                    std::to_string(episodes) + " episodes: " + std::to_string(over_budget) + " over budget, " +
                    std::to_string(inconsistent) + " with p_i off the log, " + std::to_string(off_grid) +
                    " leaving free space"};
}

}  // namespace
}  // namespace imaginenav

int main() {
    using namespace imaginenav;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"geodesic matches Dijkstra oracle", geodesic_oracle},
        {"SPL cases and fuzzed bounds", spl_checks},
        {"demo filters and waypoint training", demos_and_training},
        {"oracle imagination ordering", oracle_ordering},
        {"corrupted imagination below oracle", corruption_ordering},
        {"sampling-step sweep harness", sweep_harness},
        {"VLM replay protocol", vlm_protocol},
        {"end-to-end determinism", end_to_end_determinism},
        {"no-clip and step budget", clip_and_budget},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%s criterion %zu: %s (%s) [%.1f s]\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
