#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "imaginenav/controller.hpp"
#include "imaginenav/core.hpp"
#include "imaginenav/sensor.hpp"
#include "imaginenav/world.hpp"

namespace imaginenav {

/// Next-waypoint offset in the agent frame: dx lateral (left positive), dy forward, theta CCW heading change.
struct RelativeWaypoint {
    double dx = 0.0;
    double dy = 0.0;
    double theta = 0.0;

    double hop() const { return std::hypot(dx, dy); }
    friend bool operator==(const RelativeWaypoint&, const RelativeWaypoint&) = default;
};

inline constexpr double kMaxTurn = 30.0;
inline constexpr double kDefaultMaxHop = 3.5;
inline constexpr double kMinFrameDepth = 0.3;
inline constexpr int kDefaultSamplingStep = 11;

inline Pose apply_waypoint(const Pose& pose, const RelativeWaypoint& wp) {
    const double h = deg2rad(pose.heading);
    const double fx = std::cos(h), fy = std::sin(h);
    return Pose(pose.x + wp.dy * fx - wp.dx * fy, pose.y + wp.dy * fy + wp.dx * fx, pose.heading + wp.theta);
}

/// Inverse of apply_waypoint: expresses `target` in the frame of `origin`.
inline RelativeWaypoint relative_waypoint(const Pose& origin, const Pose& target) {
    const double h = deg2rad(origin.heading);
    const double fx = std::cos(h), fy = std::sin(h);
    const double ex = target.x - origin.x, ey = target.y - origin.y;
    return {-ex * fy + ey * fx, ex * fx + ey * fy, wrap_angle(target.heading - origin.heading)};
}

inline RelativeWaypoint clamp_waypoint(RelativeWaypoint wp, double max_hop = kDefaultMaxHop) {
    wp.theta = std::clamp(wp.theta, -kMaxTurn, kMaxTurn);
    wp.dy = std::max(0.0, wp.dy);
    double hop = wp.hop();
    if (hop > max_hop && hop > 0.0) {
        wp.dx *= max_hop / hop;
        wp.dy *= max_hop / hop;
    }
    return wp;
}

inline bool satisfies_invariants(const RelativeWaypoint& wp, double max_hop = kDefaultMaxHop) {
    return std::fabs(wp.theta) <= kMaxTurn + 1e-9 && wp.dy >= 0.0 && wp.hop() <= max_hop + 1e-9;
}

// ---------------------------------------------------------------------------
// Demonstrations

struct DemoPair {
    int trajectory_id = 0;
    int T = kDefaultSamplingStep;
    View view;
    RelativeWaypoint target;
};

struct DemoCollection {
    std::vector<DemoPair> pairs;
    int trajectories = 0;
    std::size_t dropped_depth = 0;
    std::size_t dropped_angle = 0;
    std::size_t dropped_range = 0;  // backward or beyond max_hop
};

struct CollectParams {
    int T = kDefaultSamplingStep;
    int max_steps = 500;
    double max_hop = kDefaultMaxHop;
    RenderParams render;
};

/// Turns expert trajectories into (view at t, pose at t+T relative to t) pairs with the frame filters applied.
inline DemoCollection collect_demos(const std::vector<FloorPlan>& plans, const std::vector<Episode>& episodes,
                                    const ExpertPolicy& expert, const CollectParams& params = {}) {
    if (params.T < 1) throw Error(ErrorCode::Config, "sampling step T must be >= 1");
    std::map<std::string, const FloorPlan*> by_id;
    for (const auto& p : plans) by_id[p.id()] = &p;
    DemoCollection out;
    for (const Episode& ep : episodes) {
        auto it = by_id.find(ep.floorplan_id);
        if (it == by_id.end()) throw Error(ErrorCode::Config, "episode references unknown floorplan " + ep.floorplan_id);
        const FloorPlan& plan = *it->second;
        DistanceField field = target_field(plan, ep.target_category);
        ExpertTrajectory traj = expert.run(plan, ep.start, field, params.max_steps);
        const int traj_id = out.trajectories++;
        const int n = static_cast<int>(traj.poses.size());
        for (int t = 0; t + params.T < n; ++t) {
            const Pose& now = traj.poses[static_cast<std::size_t>(t)];
            RelativeWaypoint target = relative_waypoint(now, traj.poses[static_cast<std::size_t>(t + params.T)]);
            if (std::fabs(target.theta) > kMaxTurn + 1e-9) {
                ++out.dropped_angle;
                continue;
            }
            View view = render_view(plan, now, params.render);
            if (view.min_depth() < kMinFrameDepth) {
                ++out.dropped_depth;
                continue;
            }
            if (target.dy < 0.0 || target.hop() > params.max_hop + 1e-9) {
                ++out.dropped_range;
                continue;
            }
            out.pairs.push_back({traj_id, params.T, std::move(view), target});
        }
    }
    if (out.pairs.empty()) throw Error(ErrorCode::EmptyDataset, "every demonstration pair was filtered out");
    return out;
}

// ---------------------------------------------------------------------------
// Features and regressor

struct FeatureSpec {
    int depth_bins = 16;
    double max_range = 10.0;
    std::vector<std::string> palette;

    int size() const { return depth_bins + static_cast<int>(palette.size()); }
};

/// Per-bin minimum depth (normalized by range) followed by a category presence vector.
inline std::vector<double> featurize(const FeatureSpec& spec, const View& view) {
    std::vector<double> f(static_cast<std::size_t>(spec.size()), 0.0);
    const int w = view.width();
    for (int b = 0; b < spec.depth_bins; ++b) {
        int c0 = b * w / spec.depth_bins;
        int c1 = std::max(c0 + 1, (b + 1) * w / spec.depth_bins);
        double m = spec.max_range;
        for (int c = c0; c < c1 && c < w; ++c) m = std::min(m, view.rays[static_cast<std::size_t>(c)].depth);
        f[static_cast<std::size_t>(b)] = m / spec.max_range;
    }
    for (const Ray& r : view.rays) {
        if (!r.category) continue;
        auto it = std::find(spec.palette.begin(), spec.palette.end(), *r.category);
        if (it != spec.palette.end())
            f[static_cast<std::size_t>(spec.depth_bins + (it - spec.palette.begin()))] = 1.0;
    }
    return f;
}

struct TrainHyper {
    int hidden = 64;  // 0 selects a linear regressor
    double learning_rate = 3e-3;
    double lr_decay = 0.97;  // per epoch
    int epochs = 20;
    int batch_size = 64;
    double test_fraction = 0.1;
    std::uint64_t seed = 7;
};

struct TrainReport {
    std::vector<double> train_loss;  // full-pass loss after each epoch
    double train_mse = 0.0;
    double test_mse = 0.0;
    double baseline_test_mse = 0.0;  // predicting the training-set mean
    std::size_t train_pairs = 0;
    std::size_t test_pairs = 0;
    bool monotone = true;
    std::vector<int> non_monotone_epochs;
};

class WaypointModel {
public:
    static constexpr int kOutputs = 3;

    WaypointModel() = default;

    const FeatureSpec& feature_spec() const { return spec_; }
    int hidden() const { return hidden_; }
    int T() const { return T_; }
    std::uint64_t seed() const { return seed_; }
    double max_hop() const { return max_hop_; }
    const TrainReport& report() const { return report_; }

    /// Raw (denormalized, unclamped) regression output.
    RelativeWaypoint regress(const View& view) const {
        std::vector<double> x = featurize(spec_, view);
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = (x[k] - feat_mean_[k]) / feat_std_[k];
        std::array<double, kOutputs> y = forward(x, nullptr);
        return {y[0] * tgt_std_[0] + tgt_mean_[0], y[1] * tgt_std_[1] + tgt_mean_[1],
                y[2] * tgt_std_[2] + tgt_mean_[2]};
    }

    friend bool operator==(const WaypointModel& a, const WaypointModel& b) {
        return a.hidden_ == b.hidden_ && a.w1_ == b.w1_ && a.b1_ == b.b1_ && a.w2_ == b.w2_ && a.b2_ == b.b2_ &&
               a.feat_mean_ == b.feat_mean_ && a.feat_std_ == b.feat_std_ && a.tgt_mean_ == b.tgt_mean_ &&
               a.tgt_std_ == b.tgt_std_;
    }

private:
    friend WaypointModel train(const std::vector<DemoPair>&, const FeatureSpec&, const TrainHyper&);
    friend nlohmann::json model_to_json(const WaypointModel&);
    friend WaypointModel model_from_json(const nlohmann::json&);

    int inputs() const { return spec_.size(); }
    int width_in() const { return hidden_ > 0 ? hidden_ : inputs(); }

    /// Forward pass; fills `act` with hidden activations when given.
    std::array<double, kOutputs> forward(const std::vector<double>& x, std::vector<double>* act) const {
        const int in = inputs();
        std::vector<double> h;
        const std::vector<double>* z = &x;
        if (hidden_ > 0) {
            h.assign(static_cast<std::size_t>(hidden_), 0.0);
            for (int u = 0; u < hidden_; ++u) {
                double s = b1_[static_cast<std::size_t>(u)];
                const double* row = &w1_[static_cast<std::size_t>(u) * in];
                for (int k = 0; k < in; ++k) s += row[k] * x[static_cast<std::size_t>(k)];
                h[static_cast<std::size_t>(u)] = std::tanh(s);
            }
            z = &h;
        }
        std::array<double, kOutputs> y{};
        const int m = width_in();
        for (int o = 0; o < kOutputs; ++o) {
            double s = b2_[static_cast<std::size_t>(o)];
            const double* row = &w2_[static_cast<std::size_t>(o) * m];
            for (int k = 0; k < m; ++k) s += row[k] * (*z)[static_cast<std::size_t>(k)];
            y[static_cast<std::size_t>(o)] = s;
        }
        if (act) *act = std::move(h);
        return y;
    }

    FeatureSpec spec_;
    int hidden_ = 64;
    std::vector<double> w1_, b1_, w2_, b2_;
    std::vector<double> feat_mean_, feat_std_;
    std::array<double, kOutputs> tgt_mean_{}, tgt_std_{1.0, 1.0, 1.0};
    int T_ = kDefaultSamplingStep;
    std::uint64_t seed_ = 0;
    double max_hop_ = kDefaultMaxHop;
    TrainReport report_;
};

/// Featurize, regress, clamp. Output always satisfies the RelativeWaypoint invariants.
inline RelativeWaypoint predict(const WaypointModel& model, const View& view) {
    return clamp_waypoint(model.regress(view), model.max_hop());
}

namespace detail {

inline std::array<double, 3> as_array(const RelativeWaypoint& wp) { return {wp.dx, wp.dy, wp.theta}; }

/// Deterministic 90/10 split by trajectory id; returns (train indices, test indices).
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_trajectory(
    const std::vector<DemoPair>& data, double test_fraction, std::uint64_t seed) {
    std::set<int> ids;
    for (const auto& p : data) ids.insert(p.trajectory_id);
    std::vector<int> order(ids.begin(), ids.end());
    std::mt19937_64 rng(mix_seed(seed, 0x5b117));
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(order.size())));
    if (order.size() > 1) n_test = std::clamp<std::size_t>(n_test, 1, order.size() - 1);
    else n_test = 0;
    std::set<int> test_ids(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train, test;
    for (std::size_t k = 0; k < data.size(); ++k)
        (test_ids.count(data[k].trajectory_id) ? test : train).push_back(k);
    return {train, test};
}

}  // namespace detail

/// Mean-squared-error regression on standardized targets with Adam over mini-batches.
inline WaypointModel train(const std::vector<DemoPair>& dataset, const FeatureSpec& spec,
                           const TrainHyper& hyper = {}) {
    if (dataset.size() < 100) throw Error(ErrorCode::Degenerate, "need at least 100 demonstration pairs");
    if (hyper.hidden < 0 || hyper.epochs < 1 || hyper.batch_size < 1 || hyper.learning_rate <= 0.0)
        throw Error(ErrorCode::Config, "invalid training hyper-parameters");

    WaypointModel model;
    model.spec_ = spec;
    model.hidden_ = hyper.hidden;
    model.T_ = dataset.front().T;
    model.seed_ = hyper.seed;

    auto [train_idx, test_idx] = detail::split_by_trajectory(dataset, hyper.test_fraction, hyper.seed);
    const int in = spec.size();
    const std::size_t n_in = static_cast<std::size_t>(in);

    std::vector<std::vector<double>> X(dataset.size());
    std::vector<std::array<double, 3>> Y(dataset.size());
    for (std::size_t k = 0; k < dataset.size(); ++k) {
        X[k] = featurize(spec, dataset[k].view);
        Y[k] = detail::as_array(dataset[k].target);
    }

    // Standardization statistics from the training split only.
    model.feat_mean_.assign(n_in, 0.0);
    model.feat_std_.assign(n_in, 0.0);
    for (std::size_t k : train_idx)
        for (std::size_t f = 0; f < n_in; ++f) model.feat_mean_[f] += X[k][f];
    for (auto& m : model.feat_mean_) m /= static_cast<double>(train_idx.size());
    for (std::size_t k : train_idx)
        for (std::size_t f = 0; f < n_in; ++f) model.feat_std_[f] += std::pow(X[k][f] - model.feat_mean_[f], 2);
    for (auto& s : model.feat_std_) s = std::max(std::sqrt(s / static_cast<double>(train_idx.size())), 1e-6);
    // Outputs whose training targets never vary are pinned to their mean.
    std::array<bool, 3> pinned{};
    for (int o = 0; o < 3; ++o) {
        double mean = 0.0, var = 0.0;
        for (std::size_t k : train_idx) mean += Y[k][static_cast<std::size_t>(o)];
        mean /= static_cast<double>(train_idx.size());
        for (std::size_t k : train_idx) var += std::pow(Y[k][static_cast<std::size_t>(o)] - mean, 2);
        model.tgt_mean_[static_cast<std::size_t>(o)] = mean;
        model.tgt_std_[static_cast<std::size_t>(o)] = std::max(std::sqrt(var / static_cast<double>(train_idx.size())), 1e-6);
        pinned[static_cast<std::size_t>(o)] = std::sqrt(var / static_cast<double>(train_idx.size())) < 1e-6;
    }
    for (auto& x : X)
        for (std::size_t f = 0; f < n_in; ++f) x[f] = (x[f] - model.feat_mean_[f]) / model.feat_std_[f];
    for (auto& y : Y)
        for (std::size_t o = 0; o < 3; ++o) y[o] = (y[o] - model.tgt_mean_[o]) / model.tgt_std_[o];

    // Xavier-uniform initialization.
    std::mt19937_64 rng(mix_seed(hyper.seed, 0x1417));
    const int m = hyper.hidden > 0 ? hyper.hidden : in;
    auto init = [&](std::vector<double>& w, int fan_in, int fan_out) {
        double a = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-a, a);
        w.resize(static_cast<std::size_t>(fan_in) * fan_out);
        for (auto& v : w) v = u(rng);
    };
    if (hyper.hidden > 0) {
        init(model.w1_, in, hyper.hidden);
        model.b1_.assign(static_cast<std::size_t>(hyper.hidden), 0.0);
    }
    init(model.w2_, m, 3);
    model.b2_.assign(3, 0.0);
    for (std::size_t o = 0; o < 3; ++o)
        if (pinned[o]) std::fill_n(model.w2_.begin() + static_cast<std::ptrdiff_t>(o) * m, m, 0.0);

    auto mse_over = [&](const std::vector<std::size_t>& idx) {
        if (idx.empty()) return 0.0;
        double s = 0.0;
        for (std::size_t k : idx) {
            auto y = model.forward(X[k], nullptr);
            for (std::size_t o = 0; o < 3; ++o) s += std::pow(y[o] - Y[k][o], 2);
        }
        return s / (3.0 * static_cast<double>(idx.size()));
    };

    // Adam state, one slot per parameter vector.
    std::vector<double>* params[4] = {&model.w1_, &model.b1_, &model.w2_, &model.b2_};
    std::vector<double> grads[4], m1[4], m2[4];
    for (int p = 0; p < 4; ++p) {
        grads[p].assign(params[p]->size(), 0.0);
        m1[p].assign(params[p]->size(), 0.0);
        m2[p].assign(params[p]->size(), 0.0);
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long adam_t = 0;

    std::vector<std::size_t> order = train_idx;
    std::vector<double> act;
    double lr = hyper.learning_rate;
    double prev = mse_over(train_idx);
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch_size)) {
            std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch_size));
            for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
            const double scale = 2.0 / (3.0 * static_cast<double>(end - start));
            for (std::size_t b = start; b < end; ++b) {
                const auto& x = X[order[b]];
                auto y = model.forward(x, &act);
                const std::vector<double>& z = hyper.hidden > 0 ? act : x;
                std::array<double, 3> dy{};
                for (std::size_t o = 0; o < 3; ++o) dy[o] = pinned[o] ? 0.0 : scale * (y[o] - Y[order[b]][o]);
                for (std::size_t o = 0; o < 3; ++o) {
                    grads[3][o] += dy[o];
                    for (std::size_t k = 0; k < static_cast<std::size_t>(m); ++k)
                        grads[2][o * static_cast<std::size_t>(m) + k] += dy[o] * z[k];
                }
                if (hyper.hidden > 0) {
                    for (std::size_t u = 0; u < static_cast<std::size_t>(hyper.hidden); ++u) {
                        double back = 0.0;
                        for (std::size_t o = 0; o < 3; ++o) back += dy[o] * model.w2_[o * static_cast<std::size_t>(m) + u];
                        back *= 1.0 - act[u] * act[u];
                        grads[1][u] += back;
                        double* row = &grads[0][u * n_in];
                        for (std::size_t k = 0; k < n_in; ++k) row[k] += back * x[k];
                    }
                }
            }
            ++adam_t;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t));
            for (int p = 0; p < 4; ++p) {
                auto& w = *params[p];
                for (std::size_t k = 0; k < w.size(); ++k) {
                    m1[p][k] = beta1 * m1[p][k] + (1.0 - beta1) * grads[p][k];
                    m2[p][k] = beta2 * m2[p][k] + (1.0 - beta2) * grads[p][k] * grads[p][k];
                    w[k] -= lr * (m1[p][k] / c1) / (std::sqrt(m2[p][k] / c2) + eps);
                }
            }
        }
        lr *= hyper.lr_decay;
        double loss = mse_over(train_idx);
        model.report_.train_loss.push_back(loss);
        if (loss > prev + 1e-6) {
            model.report_.monotone = false;
            model.report_.non_monotone_epochs.push_back(epoch);
        }
        prev = loss;
    }

    TrainReport& rep = model.report_;
    rep.train_pairs = train_idx.size();
    rep.test_pairs = test_idx.size();
    rep.train_mse = mse_over(train_idx);
    rep.test_mse = mse_over(test_idx);
    double base = 0.0;
    for (std::size_t k : test_idx)
        for (std::size_t o = 0; o < 3; ++o) base += Y[k][o] * Y[k][o];  // training mean is 0 after standardizing
    rep.baseline_test_mse = test_idx.empty() ? 0.0 : base / (3.0 * static_cast<double>(test_idx.size()));
    return model;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr int kModelFormatVersion = 1;

inline void to_json(nlohmann::json& j, const RelativeWaypoint& wp) {
    j = nlohmann::json{{"dx", wp.dx}, {"dy", wp.dy}, {"theta", wp.theta}};
}
inline void from_json(const nlohmann::json& j, RelativeWaypoint& wp) {
    wp = {j.at("dx").get<double>(), j.at("dy").get<double>(), j.at("theta").get<double>()};
}

inline nlohmann::json model_to_json(const WaypointModel& m) {
    return {{"format", "imaginenav.w2i_model"},
            {"version", kModelFormatVersion},
            {"feature_spec",
             {{"depth_bins", m.spec_.depth_bins}, {"max_range", m.spec_.max_range}, {"palette", m.spec_.palette}}},
            {"hidden", m.hidden_},
            {"w1", m.w1_},
            {"b1", m.b1_},
            {"w2", m.w2_},
            {"b2", m.b2_},
            {"normalization",
             {{"feature_mean", m.feat_mean_},
              {"feature_std", m.feat_std_},
              {"target_mean", m.tgt_mean_},
              {"target_std", m.tgt_std_}}},
            {"T", m.T_},
            {"seed", m.seed_},
            {"max_hop", m.max_hop_},
            {"train_mse", m.report_.train_mse},
            {"test_mse", m.report_.test_mse},
            {"baseline_test_mse", m.report_.baseline_test_mse}};
}

inline WaypointModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "imaginenav.w2i_model" || j.value("version", 0) != kModelFormatVersion)
        throw Error(ErrorCode::Format, "not a version-1 waypoint model");
    WaypointModel m;
    const auto& fs = j.at("feature_spec");
    m.spec_.depth_bins = fs.at("depth_bins").get<int>();
    m.spec_.max_range = fs.at("max_range").get<double>();
    m.spec_.palette = fs.at("palette").get<std::vector<std::string>>();
    m.hidden_ = j.at("hidden").get<int>();
    m.w1_ = j.at("w1").get<std::vector<double>>();
    m.b1_ = j.at("b1").get<std::vector<double>>();
    m.w2_ = j.at("w2").get<std::vector<double>>();
    m.b2_ = j.at("b2").get<std::vector<double>>();
    const auto& norm = j.at("normalization");
    m.feat_mean_ = norm.at("feature_mean").get<std::vector<double>>();
    m.feat_std_ = norm.at("feature_std").get<std::vector<double>>();
    m.tgt_mean_ = norm.at("target_mean").get<std::array<double, 3>>();
    m.tgt_std_ = norm.at("target_std").get<std::array<double, 3>>();
    m.T_ = j.at("T").get<int>();
    m.seed_ = j.at("seed").get<std::uint64_t>();
    m.max_hop_ = j.value("max_hop", kDefaultMaxHop);
    m.report_.train_mse = j.value("train_mse", 0.0);
    m.report_.test_mse = j.value("test_mse", 0.0);
    m.report_.baseline_test_mse = j.value("baseline_test_mse", 0.0);
    const std::size_t in = static_cast<std::size_t>(m.spec_.size());
    const std::size_t width = m.hidden_ > 0 ? static_cast<std::size_t>(m.hidden_) : in;
    if (m.feat_mean_.size() != in || m.feat_std_.size() != in || m.w2_.size() != 3 * width ||
        (m.hidden_ > 0 && m.w1_.size() != in * width))
        throw Error(ErrorCode::Format, "waypoint model weights do not match feature spec");
    return m;
}

inline nlohmann::json demo_to_json(const DemoPair& p) {
    return {{"trajectory_id", p.trajectory_id}, {"T", p.T}, {"view", p.view}, {"target", p.target}};
}

inline DemoPair demo_from_json(const nlohmann::json& j) {
    return {j.at("trajectory_id").get<int>(), j.at("T").get<int>(), j.at("view").get<View>(),
            j.at("target").get<RelativeWaypoint>()};
}

inline void write_demos_jsonl(std::ostream& os, const std::vector<DemoPair>& pairs) {
    for (const auto& p : pairs) os << demo_to_json(p).dump() << '\n';
}

inline std::vector<DemoPair> read_demos_jsonl(std::istream& is) {
    std::vector<DemoPair> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        out.push_back(demo_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

}  // namespace imaginenav
