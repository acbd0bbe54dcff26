#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "imaginenav/controller.hpp"
#include "imaginenav/core.hpp"
#include "imaginenav/image.hpp"
#include "imaginenav/imagination.hpp"
#include "imaginenav/planner.hpp"
#include "imaginenav/sensor.hpp"
#include "imaginenav/where2imagine.hpp"
#include "imaginenav/world.hpp"

namespace imaginenav {

struct RunConfig {
    std::string name = "imaginenav";
    bool use_imagination = true;
    bool use_where2imagine = true;
    ImaginationConfig imagination;
    int T = kDefaultSamplingStep;
    ScorerKind scorer = ScorerKind::Heuristic;
    int max_steps = 500;
    double success_radius = 1.0;
    double fixed_hop = 2.0;
    int max_replans = 150;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 picks the hardware concurrency
    RenderParams render;
    NavigateParams navigation;
    RelatednessTable relatedness = RelatednessTable::defaults();
    VlmSettings vlm;

    void validate() const {
        if (max_steps < 1) throw Error(ErrorCode::Config, "max_steps must be >= 1");
        if (!(fixed_hop > 0.0)) throw Error(ErrorCode::Config, "fixed hop radius must be > 0");
        if (!(success_radius > 0.0)) throw Error(ErrorCode::Config, "success_radius must be > 0");
        if (max_replans < 1) throw Error(ErrorCode::Config, "max_replans must be >= 1");
        if (T < 1) throw Error(ErrorCode::Config, "T must be >= 1");
        imagination.validate();
    }
};

struct DecisionRecord {
    int step = 0;  // actions taken before the decision
    Pose agent;
    Pose waypoint;
    Decision decision;
};

struct EpisodeResult {
    std::string episode_id;
    std::string floorplan_id;
    std::string target_category;
    bool success = false;
    double path_length = 0.0;  // p_i
    double gt_length = 0.0;    // l_i
    int steps = 0;
    bool stop_issued = false;
    double final_distance = 0.0;  // geodesic to the nearest target at the end
    Pose start;
    std::vector<Pose> trajectory;  // start pose, then the pose after every action
    std::vector<ActionRecord> actions;
    std::vector<DecisionRecord> decisions;
};

namespace detail {

struct EpisodeState {
    const FloorPlan& plan;
    const Episode& episode;
    const RunConfig& cfg;
    DistanceField field;
    OccupancyMemory memory;
    VisitGrid visits;
    EpisodeResult result;
    Pose pose;

    EpisodeState(const FloorPlan& p, const Episode& e, const RunConfig& c)
        : plan(p), episode(e), cfg(c), field(target_field(p, e.target_category)), memory(p), visits(p),
          pose(e.start) {
        result.episode_id = e.id;
        result.floorplan_id = e.floorplan_id;
        result.target_category = e.target_category;
        result.gt_length = e.gt_path_length;
        result.start = e.start;
        result.trajectory.push_back(e.start);
        visits.stamp(position(pose));
    }

    int budget_left() const { return cfg.max_steps - result.steps; }
    bool done() const { return result.stop_issued || budget_left() <= 0; }

    double goal_distance(const Pose& p) const { return field.meters(plan.cell_at(position(p))); }

    bool should_stop(const Pose& p, const View& forward) const {
        return forward.sees_category(episode.target_category) && goal_distance(p) <= cfg.success_radius + 1e-9;
    }

    void record(const Pose& p, Action a, bool collided) {
        pose = p;
        result.actions.push_back({a, collided});
        result.trajectory.push_back(p);
        ++result.steps;
        visits.stamp(position(p));
    }

    void issue_stop() {
        result.stop_issued = true;
        record(pose, Action::Stop, false);
    }

    /// Executes one action outside navigate_to and applies the stop rule afterwards.
    void act(Action a) {
        StepResult r = step(plan, pose, a);
        if (r.collided && r.blocked) memory.mark_occupied(*r.blocked);
        record(r.pose, a, r.collided);
        View v = render_view(plan, pose, cfg.render);
        memory.update(v);
        if (should_stop(pose, v) && budget_left() > 0) issue_stop();
    }

    void go_to(Vec2 goal) {
        NavigateParams params = cfg.navigation;
        params.render = cfg.render;
        bool stop_now = false;
        auto on_action = [&](const Pose& p, const View& v) {
            stop_now = should_stop(p, v);
            return stop_now;
        };
        // Keep one step in hand so a Stop can follow the last move.
        int budget = budget_left() > 1 ? budget_left() - 1 : 1;
        NavigateResult nav = navigate_to(plan, pose, goal, memory, budget, params, on_action);
        for (std::size_t k = 0; k < nav.actions.size(); ++k)
            record(nav.poses[k], nav.actions[k].action, nav.actions[k].collided);
        if (stop_now && budget_left() > 0) issue_stop();
        if (nav.actions.empty() && !done()) act(Action::TurnLeft);
    }
};

inline const ObjectInstance* nearest_seen_target(const EpisodeState& s, const Panorama& pano) {
    const ObjectInstance* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const View& v : pano.views)
        for (const Ray& r : v.rays) {
            if (!r.category || *r.category != s.episode.target_category || !r.instance_id || *r.instance_id < 0) continue;
            const ObjectInstance* obj = s.plan.find_object(*r.instance_id);
            if (!obj) continue;
            double d = distance(obj->anchor, position(s.pose));
            if (d < best_d - 1e-12 || (std::fabs(d - best_d) <= 1e-12 && obj->id < best->id)) {
                best_d = d;
                best = obj;
            }
        }
    return best;
}

/// Turns toward the instance until the stop rule fires or it is roughly ahead.
inline void face_object(EpisodeState& s, const ObjectInstance& obj) {
    Vec2 c{0.0, 0.0};
    for (Cell f : obj.footprint) {
        Vec2 p = s.plan.cell_center(f);
        c.x += p.x;
        c.y += p.y;
    }
    c.x /= static_cast<double>(obj.footprint.size());
    c.y /= static_cast<double>(obj.footprint.size());
    for (int k = 0; k < 6 && !s.done(); ++k) {
        double err = wrap_angle(rad2deg(std::atan2(c.y - s.pose.y, c.x - s.pose.x)) - s.pose.heading);
        if (std::fabs(err) <= kTurnAngle / 2.0) break;
        s.act(err > 0 ? Action::TurnLeft : Action::TurnRight);
    }
}

}  // namespace detail

/// One full episode: look around, approach the target if it is in sight, otherwise propose, imagine,
/// score and travel to a waypoint. The stop rule is checked after every action.
inline EpisodeResult run_episode(const FloorPlan& plan, const Episode& episode, const WaypointModel* model,
                                 const RunConfig& cfg, Scorer& scorer) {
    cfg.validate();
    if (episode.floorplan_id != plan.id())
        throw Error(ErrorCode::BadEpisode, "episode " + episode.id + " belongs to " + episode.floorplan_id);
    if (cfg.use_imagination && cfg.use_where2imagine && !model)
        throw Error(ErrorCode::Config, "this variant needs a trained waypoint model");
    detail::EpisodeState s(plan, episode, cfg);

    View first = render_view(plan, s.pose, cfg.render);
    s.memory.update(first);
    if (s.should_stop(s.pose, first)) s.issue_stop();

    ImaginationConfig imagination = cfg.imagination;
    imagination.rng_seed = mix_seed(cfg.seed, episode.seed);
    const WaypointSource source{cfg.use_where2imagine ? model : nullptr, cfg.fixed_hop};

    for (int cycle = 0; cycle < cfg.max_replans && !s.done(); ++cycle) {
        Panorama pano = render_panorama(plan, s.pose, cfg.render);
        for (const View& v : pano.views) s.memory.update(v);

        if (const ObjectInstance* obj = detail::nearest_seen_target(s, pano)) {
            s.go_to(obj->anchor);
            if (!s.done()) detail::face_object(s, *obj);
            continue;
        }

        std::vector<Candidate> candidates = movable_candidates(
            cfg.use_imagination ? make_candidates(plan, s.pose, source, imagination, cfg.render)
                                : make_view_candidates(plan, s.pose, cfg.fixed_hop, cfg.render));
        Decision d = scorer.choose(candidates, episode.target_category, s.visits);
        auto chosen = std::find_if(candidates.begin(), candidates.end(),
                                   [&](const Candidate& c) { return c.label == d.choice; });
        if (chosen == candidates.end()) throw Error(ErrorCode::Format, "scorer chose an unknown label " + d.choice);
        s.result.decisions.push_back({s.result.steps, s.pose, chosen->waypoint, d});
        s.go_to(position(chosen->waypoint));
    }

    EpisodeResult r = std::move(s.result);
    r.path_length = path_length_from_log(r.actions);
    r.final_distance = s.goal_distance(s.pose);
    r.success = r.stop_issued && r.final_distance <= cfg.success_radius + 1e-9;
    return r;
}

// ---------------------------------------------------------------------------
// Metrics

inline double success_rate(const std::vector<EpisodeResult>& results) {
    if (results.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : results) s += r.success ? 1.0 : 0.0;
    return s / static_cast<double>(results.size());
}

/// Success weighted by path length: mean of S_i * l_i / max(p_i, l_i).
inline double spl(const std::vector<EpisodeResult>& results) {
    if (results.empty()) return 0.0;
    double total = 0.0;
    for (const auto& r : results) {
        if (!(r.gt_length > 0.0)) throw Error(ErrorCode::BadEpisode, "episode " + r.episode_id + " has l_i <= 0");
        if (r.success) total += r.gt_length / std::max(r.path_length, r.gt_length);
    }
    return total / static_cast<double>(results.size());
}

// ---------------------------------------------------------------------------
// Evaluation

using ScorerFactory = std::function<std::unique_ptr<Scorer>()>;

/// Scorers that need no network: heuristic, or replay from `cfg.vlm.cache_dir`.
inline ScorerFactory offline_scorer_factory(const RunConfig& cfg) {
    switch (cfg.scorer) {
        case ScorerKind::Heuristic:
            return [table = cfg.relatedness] { return std::make_unique<HeuristicScorer>(table); };
        case ScorerKind::Replay:
            if (cfg.vlm.cache_dir.empty()) throw Error(ErrorCode::Config, "replay scorer needs a cache directory");
            return [cfg] {
                return std::make_unique<VlmScorer>(cfg.vlm, std::make_shared<ReplayTransport>(cfg.vlm.cache_dir),
                                                   cfg.relatedness);
            };
        case ScorerKind::Vlm: break;
    }
    throw Error(ErrorCode::Config, "the live VLM scorer needs an HTTP transport");
}

struct Report {
    RunConfig config;
    double sr = 0.0;
    double spl = 0.0;
    std::vector<EpisodeResult> results;
};

inline Report evaluate(const std::vector<FloorPlan>& plans, const std::vector<Episode>& episodes,
                       const WaypointModel* model, const RunConfig& cfg, const ScorerFactory& make_scorer) {
    cfg.validate();
    std::map<std::string, const FloorPlan*> by_id;
    for (const auto& p : plans) by_id[p.id()] = &p;
    for (const auto& e : episodes)
        if (!by_id.count(e.floorplan_id))
            throw Error(ErrorCode::Config, "episode " + e.id + " references unknown floorplan " + e.floorplan_id);

    Report report;
    report.config = cfg;
    report.results.resize(episodes.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        while (true) {
            std::size_t k = next.fetch_add(1);
            if (k >= episodes.size()) return;
            try {
                auto scorer = make_scorer();
                report.results[k] = run_episode(*by_id[episodes[k].floorplan_id], episodes[k], model, cfg, *scorer);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next = episodes.size();
            }
        }
    };
    unsigned n = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::max(1u, std::thread::hardware_concurrency());
    n = std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(1, episodes.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    report.sr = success_rate(report.results);
    report.spl = spl(report.results);
    return report;
}

// ---------------------------------------------------------------------------
// JSON and files

inline nlohmann::json imagination_to_json(const ImaginationConfig& c) {
    return {{"mode", to_string(c.mode)},
            {"label_swap_prob", c.corruption.label_swap},
            {"hallucination_prob", c.corruption.hallucination},
            {"dropout_prob", c.corruption.dropout},
            {"depth_noise_sigma", c.corruption.depth_noise},
            {"rng_seed", c.rng_seed}};
}

inline ImaginationConfig imagination_from_json(const nlohmann::json& j, ImaginationConfig c = {}) {
    if (j.contains("mode")) c.mode = imagination_mode_from_string(j["mode"].get<std::string>());
    c.corruption.label_swap = j.value("label_swap_prob", c.corruption.label_swap);
    c.corruption.hallucination = j.value("hallucination_prob", c.corruption.hallucination);
    c.corruption.dropout = j.value("dropout_prob", c.corruption.dropout);
    c.corruption.depth_noise = j.value("depth_noise_sigma", c.corruption.depth_noise);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.validate();
    return c;
}

/// Credentials are never serialized.
inline nlohmann::json run_config_to_json(const RunConfig& c) {
    return {{"name", c.name},
            {"use_imagination", c.use_imagination},
            {"use_where2imagine", c.use_where2imagine},
            {"imagination", imagination_to_json(c.imagination)},
            {"T", c.T},
            {"scorer", to_string(c.scorer)},
            {"max_steps", c.max_steps},
            {"success_radius", c.success_radius},
            {"fixed_hop", c.fixed_hop},
            {"max_replans", c.max_replans},
            {"seed", c.seed},
            {"render", {{"hfov", c.render.hfov}, {"width", c.render.width}, {"max_range", c.render.max_range}}},
            {"navigation",
             {{"reach_radius", c.navigation.reach_radius},
              {"unknown_cost", c.navigation.unknown_cost},
              {"replan_interval", c.navigation.replan_interval}}},
            {"relatedness", relatedness_to_json(c.relatedness)},
            {"vlm",
             {{"model", c.vlm.model},
              {"retry_limit", c.vlm.retry_limit},
              {"backoff_seconds", c.vlm.backoff_seconds},
              {"timeout_seconds", c.vlm.timeout_seconds},
              {"cache_dir", c.vlm.cache_dir}}}};
}

/// Missing keys keep the values of `c`, so a config file only needs the fields it changes.
inline RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c = {}) {
    if (!j.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
    try {
        c.name = j.value("name", c.name);
        c.use_imagination = j.value("use_imagination", c.use_imagination);
        c.use_where2imagine = j.value("use_where2imagine", c.use_where2imagine);
        if (j.contains("imagination")) c.imagination = imagination_from_json(j["imagination"], c.imagination);
        c.T = j.value("T", c.T);
        if (j.contains("scorer")) c.scorer = scorer_kind_from_string(j["scorer"].get<std::string>());
        c.max_steps = j.value("max_steps", c.max_steps);
        c.success_radius = j.value("success_radius", c.success_radius);
        c.fixed_hop = j.value("fixed_hop", c.fixed_hop);
        c.max_replans = j.value("max_replans", c.max_replans);
        c.seed = j.value("seed", c.seed);
        c.threads = j.value("threads", c.threads);
        if (j.contains("render")) {
            const auto& r = j["render"];
            c.render.hfov = r.value("hfov", c.render.hfov);
            c.render.width = r.value("width", c.render.width);
            c.render.max_range = r.value("max_range", c.render.max_range);
        }
        if (j.contains("navigation")) {
            const auto& n = j["navigation"];
            c.navigation.reach_radius = n.value("reach_radius", c.navigation.reach_radius);
            c.navigation.unknown_cost = n.value("unknown_cost", c.navigation.unknown_cost);
            c.navigation.replan_interval = n.value("replan_interval", c.navigation.replan_interval);
        }
        if (j.contains("relatedness")) c.relatedness = relatedness_from_json(j["relatedness"]);
        if (j.contains("vlm")) {
            const auto& v = j["vlm"];
            c.vlm.model = v.value("model", c.vlm.model);
            c.vlm.retry_limit = v.value("retry_limit", c.vlm.retry_limit);
            c.vlm.backoff_seconds = v.value("backoff_seconds", c.vlm.backoff_seconds);
            c.vlm.timeout_seconds = v.value("timeout_seconds", c.vlm.timeout_seconds);
            c.vlm.cache_dir = v.value("cache_dir", c.vlm.cache_dir);
            c.vlm.url = v.value("url", c.vlm.url);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Config, std::string("bad config: ") + e.what());
    }
    c.validate();
    return c;
}

inline nlohmann::json result_summary_json(const EpisodeResult& r) {
    nlohmann::json decisions = nlohmann::json::array();
    for (const auto& d : r.decisions)
        decisions.push_back({{"step", d.step}, {"agent", d.agent}, {"waypoint", d.waypoint}, {"decision", d.decision}});
    return {{"episode_id", r.episode_id},
            {"floorplan_id", r.floorplan_id},
            {"target_category", r.target_category},
            {"success", r.success},
            {"path_length", r.path_length},
            {"gt_length", r.gt_length},
            {"steps", r.steps},
            {"stop_issued", r.stop_issued},
            {"final_distance", r.final_distance},
            {"start", r.start},
            {"decisions", decisions}};
}

inline EpisodeResult result_from_summary_json(const nlohmann::json& j) {
    EpisodeResult r;
    r.episode_id = j.at("episode_id").get<std::string>();
    r.floorplan_id = j.value("floorplan_id", "");
    r.target_category = j.value("target_category", "");
    r.success = j.at("success").get<bool>();
    r.path_length = j.at("path_length").get<double>();
    r.gt_length = j.at("gt_length").get<double>();
    r.steps = j.at("steps").get<int>();
    r.stop_issued = j.at("stop_issued").get<bool>();
    r.final_distance = j.value("final_distance", 0.0);
    if (j.contains("start")) r.start = j["start"].get<Pose>();
    if (j.contains("decisions"))
        for (const auto& d : j["decisions"])
            r.decisions.push_back({d.at("step").get<int>(), d.at("agent").get<Pose>(), d.at("waypoint").get<Pose>(),
                                   d.at("decision").get<Decision>()});
    return r;
}

inline constexpr int kReportFormatVersion = 1;

inline nlohmann::json report_to_json(const Report& r) {
    nlohmann::json episodes = nlohmann::json::array();
    for (const auto& e : r.results) episodes.push_back(result_summary_json(e));
    return {{"format", "imaginenav.report"}, {"version", kReportFormatVersion},
            {"config", run_config_to_json(r.config)}, {"episodes", r.results.size()},
            {"sr", r.sr}, {"spl", r.spl}, {"results", episodes}};
}

/// Per-episode trajectory file: a summary line, then one line per pose with the action that led to it.
inline void write_trajectory_jsonl(std::ostream& os, const EpisodeResult& r) {
    os << result_summary_json(r).dump() << "\n";
    for (std::size_t t = 0; t < r.trajectory.size(); ++t) {
        nlohmann::json line = {{"t", t}, {"pose", r.trajectory[t]}};
        if (t > 0) {
            line["action"] = to_string(r.actions[t - 1].action);
            line["collided"] = r.actions[t - 1].collided;
        }
        os << line.dump() << "\n";
    }
}

inline EpisodeResult read_trajectory_jsonl(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorCode::Format, "empty trajectory file");
    EpisodeResult r = result_from_summary_json(nlohmann::json::parse(line));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        r.trajectory.push_back(j.at("pose").get<Pose>());
        if (j.contains("action"))
            r.actions.push_back({action_from_string(j["action"].get<std::string>()), j.value("collided", false)});
    }
    return r;
}

inline void write_report_files(const Report& report, const std::filesystem::path& report_path,
                               const std::filesystem::path& trajectory_dir) {
    if (report_path.has_parent_path()) std::filesystem::create_directories(report_path.parent_path());
    std::ofstream(report_path) << report_to_json(report).dump(2) << "\n";
    if (trajectory_dir.empty()) return;
    std::filesystem::create_directories(trajectory_dir);
    for (const auto& r : report.results) {
        std::ofstream out(trajectory_dir / (r.episode_id + ".jsonl"));
        write_trajectory_jsonl(out, r);
    }
}

/// Rebuilds SR/SPL from a directory of per-episode files (sorted by file name).
inline Report reaggregate(const std::filesystem::path& trajectory_dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(trajectory_dir))
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    Report r;
    for (const auto& f : files) {
        std::ifstream in(f);
        r.results.push_back(read_trajectory_jsonl(in));
    }
    r.sr = success_rate(r.results);
    r.spl = spl(r.results);
    return r;
}

// ---------------------------------------------------------------------------
// Benchmarks, models and ablations

/// Worlds and episodes drawn from one seed. Evaluation and demonstration sets use disjoint seeds.
struct BenchmarkSpec {
    std::uint64_t seed = 2024;
    int worlds = 20;
    int episodes_per_world = 5;
    EpisodeSpec episode;
    WorldSpec world = WorldSpec::defaults();
};

struct Benchmark {
    std::vector<FloorPlan> plans;
    std::vector<Episode> episodes;
};

inline Benchmark make_benchmark(const BenchmarkSpec& spec) {
    Benchmark b;
    for (int w = 0; w < spec.worlds; ++w) {
        std::uint64_t s = mix_seed(spec.seed, static_cast<std::uint64_t>(w));
        std::ostringstream id;
        id << "w" << spec.seed << "_" << std::setw(3) << std::setfill('0') << w;
        b.plans.push_back(generate_floorplan(s, spec.world, id.str()));
        auto eps = generate_episodes(b.plans.back(), spec.episodes_per_world, mix_seed(s, 0xe9), spec.episode);
        b.episodes.insert(b.episodes.end(), eps.begin(), eps.end());
    }
    return b;
}

/// Writes `<dir>/worlds/<id>.json` per floorplan and `<dir>/episodes.jsonl`.
inline void save_benchmark(const Benchmark& b, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "worlds");
    for (const auto& p : b.plans) {
        if (p.id().empty()) throw Error(ErrorCode::Config, "floorplans need ids to be saved");
        std::ofstream(dir / "worlds" / (p.id() + ".json")) << floorplan_to_json(p).dump() << "\n";
    }
    std::ofstream eps(dir / "episodes.jsonl");
    for (const auto& e : b.episodes) eps << episode_to_json(e).dump() << "\n";
}

inline Benchmark load_benchmark(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir / "worlds"))
        throw Error(ErrorCode::Format, "no worlds/ directory under " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir / "worlds"))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    Benchmark b;
    for (const auto& f : files) {
        std::ifstream in(f);
        b.plans.push_back(floorplan_from_json(nlohmann::json::parse(in)));
    }
    std::ifstream eps(dir / "episodes.jsonl");
    if (!eps) throw Error(ErrorCode::Format, "missing " + (dir / "episodes.jsonl").string());
    std::string line;
    while (std::getline(eps, line))
        if (!line.empty()) b.episodes.push_back(episode_from_json(nlohmann::json::parse(line)));
    return b;
}

inline BenchmarkSpec demo_benchmark_spec() {
    BenchmarkSpec s;
    s.seed = 7001;
    s.worlds = 80;
    s.episodes_per_world = 10;
    return s;
}

struct ModelRecipe {
    BenchmarkSpec demos = demo_benchmark_spec();
    ExpertPolicy expert;
    CollectParams collect;
    TrainHyper hyper;
};

inline WaypointModel build_model(const ModelRecipe& recipe, int T) {
    Benchmark b = make_benchmark(recipe.demos);
    CollectParams cp = recipe.collect;
    cp.T = T;
    DemoCollection demos = collect_demos(b.plans, b.episodes, recipe.expert, cp);
    FeatureSpec fs;
    fs.max_range = cp.render.max_range;
    fs.palette = recipe.demos.world.palette();
    return train(demos.pairs, fs, recipe.hyper);
}

/// The five rows of the imagination ablation.
inline std::vector<RunConfig> ablation_variants(const RunConfig& base) {
    auto make = [&](std::string name, bool imagine, bool w2i, ImaginationMode mode) {
        RunConfig c = base;
        c.name = std::move(name);
        c.use_imagination = imagine;
        c.use_where2imagine = w2i;
        c.imagination.mode = mode;
        return c;
    };
    return {make("no_imagination", false, false, ImaginationMode::Oracle),
            make("fixed_hop_oracle", true, false, ImaginationMode::Oracle),
            make("w2i_oracle", true, true, ImaginationMode::Oracle),
            make("fixed_hop_corrupted", true, false, ImaginationMode::Corrupted),
            make("w2i_corrupted", true, true, ImaginationMode::Corrupted)};
}

struct TableRow {
    std::string name;
    int T = 0;
    bool use_imagination = false;
    bool use_where2imagine = false;
    std::string imagination_mode;
    std::size_t episodes = 0;
    double sr = 0.0;
    double spl = 0.0;
};

inline TableRow table_row(const Report& r) {
    return {r.config.name, r.config.T, r.config.use_imagination, r.config.use_where2imagine,
            std::string(to_string(r.config.imagination.mode)), r.results.size(), r.sr, r.spl};
}

inline nlohmann::json table_to_json(const std::vector<TableRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows)
        out.push_back({{"name", r.name}, {"T", r.T}, {"use_imagination", r.use_imagination},
                       {"use_where2imagine", r.use_where2imagine}, {"imagination_mode", r.imagination_mode},
                       {"episodes", r.episodes}, {"sr", r.sr}, {"spl", r.spl}});
    return out;
}

inline std::string table_to_text(const std::vector<TableRow>& rows) {
    std::ostringstream os;
    os << std::left << std::setw(22) << "variant" << std::right << std::setw(4) << "T" << std::setw(7) << "imag"
       << std::setw(6) << "w2i" << std::setw(11) << "mode" << std::setw(6) << "n" << std::setw(8) << "SR"
       << std::setw(8) << "SPL" << "\n";
    os << std::fixed << std::setprecision(3);
    for (const auto& r : rows)
        os << std::left << std::setw(22) << r.name << std::right << std::setw(4) << r.T << std::setw(7)
           << (r.use_imagination ? "yes" : "no") << std::setw(6) << (r.use_where2imagine ? "yes" : "no")
           << std::setw(11) << r.imagination_mode << std::setw(6) << r.episodes << std::setw(8) << r.sr
           << std::setw(8) << r.spl << "\n";
    return os.str();
}

inline std::vector<TableRow> ablate(const Benchmark& bench, const std::vector<RunConfig>& grid,
                                    const WaypointModel* model, const std::function<ScorerFactory(const RunConfig&)>& scorers) {
    std::vector<TableRow> rows;
    for (const auto& cfg : grid) rows.push_back(table_row(evaluate(bench.plans, bench.episodes, model, cfg, scorers(cfg))));
    return rows;
}

/// Retrains the waypoint model for every T and evaluates the Where2Imagine oracle variant with it.
inline std::vector<TableRow> sweep_T(const Benchmark& bench, const RunConfig& base, const ModelRecipe& recipe,
                                     const std::vector<int>& Ts,
                                     const std::function<ScorerFactory(const RunConfig&)>& scorers) {
    std::vector<TableRow> rows;
    for (int T : Ts) {
        WaypointModel model = build_model(recipe, T);
        RunConfig cfg = base;
        cfg.name = "w2i_oracle_T" + std::to_string(T);
        cfg.T = T;
        cfg.use_imagination = true;
        cfg.use_where2imagine = true;
        cfg.imagination.mode = ImaginationMode::Oracle;
        rows.push_back(table_row(evaluate(bench.plans, bench.episodes, &model, cfg, scorers(cfg))));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Top-down trajectory image

inline constexpr int kTrajectoryPixelsPerCell = 8;

/// North-up map: walls, object footprints with a legend, the path, a start star, target markers and
/// the chosen waypoints tagged with their decision labels.
inline Image render_trajectory(const FloorPlan& plan, const EpisodeResult& result) {
    const int px = kTrajectoryPixelsPerCell;
    std::set<std::string> cats;
    for (const auto& o : plan.objects()) cats.insert(o.category);
    const int map_w = plan.width() * px, map_h = plan.height() * px;
    const int legend_rows = static_cast<int>((cats.size() + 3) / 4);
    Image img(map_w, map_h + 4 + legend_rows * 12, Rgb{0, 0, 0});

    auto to_px = [&](Vec2 p) {
        double gx = (p.x - plan.origin().x) / plan.cell_size(), gy = (p.y - plan.origin().y) / plan.cell_size();
        return std::pair<int, int>{static_cast<int>(std::lround(gx * px)),
                                   static_cast<int>(std::lround((plan.height() - gy) * px))};
    };
    for (int j = 0; j < plan.height(); ++j)
        for (int i = 0; i < plan.width(); ++i) {
            Cell c{i, j};
            Rgb col = plan.is_free(c) ? Rgb{235, 235, 235} : Rgb{60, 60, 60};
            if (const ObjectInstance* o = plan.object_at(c)) col = hsv_to_rgb(category_hue(o->category), 0.7, 0.85);
            img.fill_rect(i * px, (plan.height() - 1 - j) * px, px, px, col);
        }

    const Rgb target_col{255, 200, 0};
    for (const ObjectInstance* o : plan.instances_of(result.target_category)) {
        auto [x, y] = to_px(o->anchor);
        for (int a = -5; a <= 5; ++a) {
            img.set(x + a, y + a, target_col);
            img.set(x + a, y - a, target_col);
        }
        img.fill_rect(x - 1, y - 1, 3, 3, target_col);
    }

    const Rgb path_col{220, 20, 60};
    for (std::size_t k = 1; k < result.trajectory.size(); ++k) {
        auto [x0, y0] = to_px(position(result.trajectory[k - 1]));
        auto [x1, y1] = to_px(position(result.trajectory[k]));
        img.draw_line(x0, y0, x1, y1, path_col);
    }

    for (const auto& d : result.decisions) {
        auto [x, y] = to_px(position(d.waypoint));
        img.fill_rect(x - 2, y - 2, 5, 5, Rgb{30, 90, 220});
        img.draw_text(x + 4, y - 3, d.decision.choice, Rgb{30, 90, 220});
    }

    // Five-pointed star at the start.
    const Pose& s = result.trajectory.empty() ? result.start : result.trajectory.front();
    auto [sx, sy] = to_px(position(s));
    std::vector<std::pair<int, int>> tips;
    for (int k = 0; k < 5; ++k) {
        double a = deg2rad(90.0 + 144.0 * k);
        tips.emplace_back(sx + static_cast<int>(std::lround(7 * std::cos(a))),
                          sy - static_cast<int>(std::lround(7 * std::sin(a))));
    }
    for (int k = 0; k < 5; ++k)
        img.draw_line(tips[k].first, tips[k].second, tips[(k + 1) % 5].first, tips[(k + 1) % 5].second,
                      Rgb{0, 160, 0});

    int k = 0;
    for (const auto& c : cats) {
        int lx = 2 + (k % 4) * (map_w / 4), ly = map_h + 4 + (k / 4) * 12;
        img.fill_rect(lx, ly + 1, 8, 8, hsv_to_rgb(category_hue(c), 0.7, 0.85));
        img.draw_text(lx + 10, ly + 1, c, Rgb{255, 255, 255});
        ++k;
    }
    return img;
}

}  // namespace imaginenav
