#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "imaginenav/imaginenav.hpp"
#include "imaginenav/vlm_http.hpp"

namespace fs = std::filesystem;
using namespace imaginenav;

namespace {

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Config, "cannot open " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::Format, "invalid JSON in " + path.string());
    return j;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Config, "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

// Options shared by the subcommands that run episodes.
struct RunOptions {
    std::string config_path;
    std::string scorer;
    std::string benchmark_dir;
    std::string model_path;
    std::string cache_dir;
    std::uint64_t bench_seed = BenchmarkSpec{}.seed;
    int bench_worlds = BenchmarkSpec{}.worlds;
    int bench_episodes = BenchmarkSpec{}.episodes_per_world;
    int threads = -1;

    void add_to(CLI::App* app, bool with_model = true) {
        app->add_option("--config", config_path, "JSON file mirroring RunConfig");
        app->add_option("--scorer", scorer, "waypoint scorer")->check(CLI::IsMember({"heuristic", "vlm", "replay"}));
        app->add_option("--benchmark", benchmark_dir, "directory written by generate-worlds");
        app->add_option("--bench-seed", bench_seed, "seed of the generated benchmark when --benchmark is absent");
        app->add_option("--bench-worlds", bench_worlds, "worlds in the generated benchmark");
        app->add_option("--bench-episodes", bench_episodes, "episodes per world in the generated benchmark");
        if (with_model) app->add_option("--model", model_path, "trained waypoint model (JSON)");
        app->add_option("--cache-dir", cache_dir, "replay cache directory for the VLM scorer");
        app->add_option("--threads", threads, "worker threads, 0 for all cores");
    }

    RunConfig config() const {
        RunConfig cfg;
        if (!config_path.empty()) cfg = run_config_from_json(read_json_file(config_path));
        if (!scorer.empty()) cfg.scorer = scorer_kind_from_string(scorer);
        if (!cache_dir.empty()) cfg.vlm.cache_dir = cache_dir;
        if (threads >= 0) cfg.threads = threads;
        cfg.vlm = vlm_settings_from_env(cfg.vlm);
        cfg.validate();
        return cfg;
    }

    Benchmark benchmark() const {
        if (!benchmark_dir.empty()) return load_benchmark(benchmark_dir);
        BenchmarkSpec spec;
        spec.seed = bench_seed;
        spec.worlds = bench_worlds;
        spec.episodes_per_world = bench_episodes;
        return make_benchmark(spec);
    }

    // Loads --model, or trains the default recipe at the configured T when none is given.
    std::optional<WaypointModel> model(const RunConfig& cfg, bool needed) const {
        if (!model_path.empty()) return model_from_json(read_json_file(model_path));
        if (!needed) return std::nullopt;
        std::cerr << "no --model given; training the default waypoint model (T=" << cfg.T << ")\n";
        return build_model(ModelRecipe{}, cfg.T);
    }
};

ScorerFactory scorer_factory(const RunConfig& cfg) {
    if (cfg.scorer != ScorerKind::Vlm) return offline_scorer_factory(cfg);
    std::shared_ptr<VlmTransport> transport = std::make_shared<HttpTransport>(cfg.vlm);
    if (!cfg.vlm.cache_dir.empty()) transport = std::make_shared<RecordingTransport>(transport, cfg.vlm.cache_dir);
    return [cfg, transport] { return std::make_unique<VlmScorer>(cfg.vlm, transport, cfg.relatedness); };
}

std::vector<int> parse_ts(const std::string& list) {
    std::vector<int> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw Error(ErrorCode::Config, "bad T value '" + item + "'");
        }
    }
    if (out.empty()) throw Error(ErrorCode::Config, "empty T list");
    return out;
}

void print_table(const std::vector<TableRow>& rows, const std::string& out) {
    std::cout << table_to_text(rows);
    if (!out.empty()) write_json_file(out, {{"format", "imaginenav.table"}, {"version", 1}, {"rows", table_to_json(rows)}});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Imagination-guided object navigation on procedural 2-D worlds"};
    app.require_subcommand(1);

    // generate-worlds
    auto* gen = app.add_subcommand("generate-worlds", "Generate floorplans and episodes");
    BenchmarkSpec gen_spec;
    std::string gen_out;
    double gen_min_start = gen_spec.episode.min_start_distance;
    gen->add_option("--seed", gen_spec.seed, "benchmark seed");
    gen->add_option("--worlds", gen_spec.worlds, "number of floorplans")->check(CLI::PositiveNumber);
    gen->add_option("--episodes-per-world", gen_spec.episodes_per_world, "episodes per floorplan")
        ->check(CLI::PositiveNumber);
    gen->add_option("--min-start-distance", gen_min_start, "minimum geodesic start distance in meters");
    gen->add_option("--out", gen_out, "output directory")->required();

    // collect-demos
    auto* col = app.add_subcommand("collect-demos", "Collect expert demonstration pairs");
    std::string col_bench, col_out;
    BenchmarkSpec col_spec = demo_benchmark_spec();
    CollectParams col_params;
    col->add_option("--benchmark", col_bench, "directory written by generate-worlds (default: demo set)");
    col->add_option("--seed", col_spec.seed, "seed of the generated demo set");
    col->add_option("--worlds", col_spec.worlds, "worlds in the generated demo set");
    col->add_option("--T", col_params.T, "sampling step in actions")->check(CLI::PositiveNumber);
    col->add_option("--out", col_out, "output JSON-lines file")->required();

    // train-w2i
    auto* tr = app.add_subcommand("train-w2i", "Train the waypoint regressor");
    std::string tr_demos, tr_out;
    TrainHyper hyper;
    int tr_T = kDefaultSamplingStep;
    tr->add_option("--demos", tr_demos, "demonstration pairs from collect-demos (default: collect the demo set)");
    tr->add_option("--T", tr_T, "sampling step when collecting on the fly")->check(CLI::PositiveNumber);
    tr->add_option("--epochs", hyper.epochs, "training epochs")->check(CLI::PositiveNumber);
    tr->add_option("--hidden", hyper.hidden, "hidden units, 0 for linear")->check(CLI::NonNegativeNumber);
    tr->add_option("--lr", hyper.learning_rate, "learning rate");
    tr->add_option("--seed", hyper.seed, "training seed");
    tr->add_option("--out", tr_out, "output model file")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate one configuration");
    RunOptions ev_opts;
    std::string ev_out, ev_traj;
    ev_opts.add_to(ev);
    ev->add_option("--out", ev_out, "report JSON path")->required();
    ev->add_option("--trajectories", ev_traj, "directory for per-episode JSON-lines files");

    // ablate
    auto* ab = app.add_subcommand("ablate", "Run the five imagination variants");
    RunOptions ab_opts;
    std::string ab_out;
    ab_opts.add_to(ab);
    ab->add_option("--out", ab_out, "table JSON path");

    // sweep-T
    auto* sw = app.add_subcommand("sweep-T", "Retrain and evaluate across sampling steps");
    RunOptions sw_opts;
    std::string sw_out, sw_ts = "8,10,11,12,15";
    sw_opts.add_to(sw, false);
    sw->add_option("--Ts", sw_ts, "comma-separated sampling steps");
    sw->add_option("--out", sw_out, "table JSON path");

    // render-trajectory
    auto* rt = app.add_subcommand("render-trajectory", "Draw an episode trajectory as a PNG");
    RunOptions rt_opts;
    std::string rt_traj, rt_out;
    rt->add_option("--trajectory", rt_traj, "per-episode JSON-lines file from eval")->required();
    rt->add_option("--benchmark", rt_opts.benchmark_dir, "directory written by generate-worlds");
    rt->add_option("--bench-seed", rt_opts.bench_seed, "seed of the generated benchmark");
    rt->add_option("--bench-worlds", rt_opts.bench_worlds, "worlds in the generated benchmark");
    rt->add_option("--bench-episodes", rt_opts.bench_episodes, "episodes per world in the generated benchmark");
    rt->add_option("--out", rt_out, "PNG path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            gen_spec.episode.min_start_distance = gen_min_start;
            Benchmark b = make_benchmark(gen_spec);
            save_benchmark(b, gen_out);
            std::cout << "wrote " << b.plans.size() << " worlds and " << b.episodes.size() << " episodes to "
                      << gen_out << "\n";
        } else if (*col) {
            Benchmark b = col_bench.empty() ? make_benchmark(col_spec) : load_benchmark(col_bench);
            DemoCollection demos = collect_demos(b.plans, b.episodes, ExpertPolicy{}, col_params);
            if (fs::path(col_out).has_parent_path()) fs::create_directories(fs::path(col_out).parent_path());
            std::ofstream out(col_out);
            write_demos_jsonl(out, demos.pairs);
            std::cout << "kept " << demos.pairs.size() << " pairs from " << demos.trajectories
                      << " trajectories; dropped depth=" << demos.dropped_depth << " angle=" << demos.dropped_angle
                      << " range=" << demos.dropped_range << "\n";
        } else if (*tr) {
            std::vector<DemoPair> pairs;
            if (!tr_demos.empty()) {
                std::ifstream in(tr_demos);
                if (!in) throw Error(ErrorCode::Config, "cannot open " + tr_demos);
                pairs = read_demos_jsonl(in);
            } else {
                Benchmark b = make_benchmark(demo_benchmark_spec());
                CollectParams cp;
                cp.T = tr_T;
                pairs = collect_demos(b.plans, b.episodes, ExpertPolicy{}, cp).pairs;
            }
            FeatureSpec spec;
            spec.max_range = RenderParams{}.max_range;
            spec.palette = WorldSpec::defaults().palette();
            WaypointModel model = train(pairs, spec, hyper);
            write_json_file(tr_out, model_to_json(model));
            const TrainReport& r = model.report();
            std::cout << "train mse " << r.train_mse << ", test mse " << r.test_mse << ", baseline "
                      << r.baseline_test_mse << ", ratio " << r.test_mse / r.baseline_test_mse << "\n";
        } else if (*ev) {
            RunConfig cfg = ev_opts.config();
            Benchmark b = ev_opts.benchmark();
            auto model = ev_opts.model(cfg, cfg.use_imagination && cfg.use_where2imagine);
            Report report = evaluate(b.plans, b.episodes, model ? &*model : nullptr, cfg, scorer_factory(cfg));
            write_report_files(report, ev_out, ev_traj);
            std::cout << cfg.name << ": SR " << report.sr << " SPL " << report.spl << " over " << report.results.size()
                      << " episodes\n";
        } else if (*ab) {
            RunConfig cfg = ab_opts.config();
            Benchmark b = ab_opts.benchmark();
            auto model = ab_opts.model(cfg, true);
            print_table(ablate(b, ablation_variants(cfg), &*model, scorer_factory), ab_out);
        } else if (*sw) {
            RunConfig cfg = sw_opts.config();
            Benchmark b = sw_opts.benchmark();
            print_table(sweep_T(b, cfg, ModelRecipe{}, parse_ts(sw_ts), scorer_factory), sw_out);
        } else if (*rt) {
            std::ifstream in(rt_traj);
            if (!in) throw Error(ErrorCode::Config, "cannot open " + rt_traj);
            EpisodeResult result = read_trajectory_jsonl(in);
            Benchmark b = rt_opts.benchmark();
            auto it = std::find_if(b.plans.begin(), b.plans.end(),
                                   [&](const FloorPlan& p) { return p.id() == result.floorplan_id; });
            if (it == b.plans.end()) throw Error(ErrorCode::Config, "floorplan " + result.floorplan_id + " not found");
            if (fs::path(rt_out).has_parent_path()) fs::create_directories(fs::path(rt_out).parent_path());
            std::ofstream(rt_out, std::ios::binary) << render_trajectory(*it, result).encode_png();
            std::cout << "wrote " << rt_out << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
