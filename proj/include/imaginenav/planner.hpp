#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "imaginenav/core.hpp"
#include "imaginenav/imagination.hpp"
#include "imaginenav/prompt_template.hpp"
#include "imaginenav/sensor.hpp"
#include "imaginenav/where2imagine.hpp"
#include "imaginenav/world.hpp"

namespace imaginenav {

inline constexpr int kCandidateCount = Panorama::kViews;
inline constexpr double kFallbackHop = 1.0;

inline std::string candidate_label(int k) { return std::string(1, static_cast<char>('A' + k)); }

struct Candidate {
    std::string label;
    int direction = 0;  // k, the view at agent heading + 60k
    Pose waypoint;
    View imagined;
    bool fallback = false;    // proposer's waypoint was unusable; a 1 m forward hop was used instead
    bool stationary = false;  // no usable waypoint leaves the agent's immediate surroundings
};

struct Decision {
    std::string choice;
    std::string reason;
    std::string scorer_id;
    std::optional<std::string> raw_response;

    friend bool operator==(const Decision&, const Decision&) = default;
};

// ---------------------------------------------------------------------------
// Candidate construction

/// Where the next waypoint comes from: a trained regressor, or a fixed forward hop when none is given.
struct WaypointSource {
    const WaypointModel* model = nullptr;
    double fixed_hop = 2.0;

    RelativeWaypoint operator()(const View& view) const {
        if (model) return predict(*model, view);
        return {0.0, fixed_hop, 0.0};
    }
};

namespace detail {

/// Resolves the proposed waypoint. A proposal that cannot be snapped to free space, or that would not
/// move the agent beyond the snap radius, is replaced by a 1 m forward hop; if that fails too the
/// candidate stays at the agent and is flagged stationary.
inline Pose resolve_or_fallback(const FloorPlan& plan, const Pose& facing, const RelativeWaypoint& wp,
                                Candidate& c) {
    auto usable = [&](const RelativeWaypoint& hop) -> std::optional<Pose> {
        try {
            Pose p = resolve_waypoint(plan, apply_waypoint(facing, hop));
            if (distance(position(p), position(facing)) > kSnapRadius) return p;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoFreeCell) throw;
        }
        return std::nullopt;
    };
    if (auto p = usable(wp)) return *p;
    c.fallback = true;
    if (auto p = usable({0.0, kFallbackHop, 0.0})) return *p;
    c.stationary = true;
    return facing;
}

}  // namespace detail

/// Six candidates, one per 60 degree view: propose a waypoint from the real view, then imagine the view there.
inline std::vector<Candidate> make_candidates(const FloorPlan& plan, const Pose& agent, const WaypointSource& source,
                                              const ImaginationConfig& cfg, const RenderParams& render = {}) {
    cfg.validate();
    std::vector<Candidate> out;
    for (int k = 0; k < kCandidateCount; ++k) {
        Pose facing = agent.rotated(Panorama::kSpacing * k);
        View now = render_view(plan, facing, render);
        Candidate c;
        c.label = candidate_label(k);
        c.direction = k;
        c.waypoint = detail::resolve_or_fallback(plan, facing, source(now), c);
        c.imagined = imagine_at(plan, c.waypoint, cfg, render);
        out.push_back(std::move(c));
    }
    return out;
}

/// Candidates the agent can actually travel to; all of them when none can.
inline std::vector<Candidate> movable_candidates(const std::vector<Candidate>& all) {
    std::vector<Candidate> out;
    for (const auto& c : all)
        if (!c.stationary) out.push_back(c);
    return out.empty() ? all : out;
}

/// Candidates without imagination: the scorer sees the agent's own six views and the waypoint
/// sits `hop` meters along the chosen direction.
inline std::vector<Candidate> make_view_candidates(const FloorPlan& plan, const Pose& agent, double hop,
                                                   const RenderParams& render = {}) {
    std::vector<Candidate> out;
    for (int k = 0; k < kCandidateCount; ++k) {
        Pose facing = agent.rotated(Panorama::kSpacing * k);
        Candidate c;
        c.label = candidate_label(k);
        c.direction = k;
        c.waypoint = detail::resolve_or_fallback(plan, facing, {0.0, hop, 0.0}, c);
        c.imagined = render_view(plan, facing, render);
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Heuristic scorer

/// Symmetric category relatedness. Pairs not listed score `missing`; a category against itself scores `self`.
class RelatednessTable {
public:
    RelatednessTable() = default;

    static RelatednessTable defaults() {
        RelatednessTable t;
        const std::pair<const char*, const char*> strong[] = {
            {"couch", "tv"}, {"bed", "nightstand"}, {"refrigerator", "oven"}, {"toilet", "bathtub"},
            {"desk", "chair"}, {"table", "chair"}, {"toilet", "sink"}};
        for (auto [a, b] : strong) t.set(a, b, 0.8);
        const std::pair<const char*, const char*> medium[] = {
            {"bed", "wardrobe"}, {"oven", "sink"}, {"refrigerator", "sink"}, {"desk", "bookshelf"},
            {"couch", "plant"}, {"bathtub", "sink"}, {"refrigerator", "table"}, {"oven", "table"}};
        for (auto [a, b] : medium) t.set(a, b, 0.7);
        const std::pair<const char*, const char*> weak[] = {
            {"couch", "table"}, {"tv", "plant"}, {"wardrobe", "nightstand"}, {"bookshelf", "chair"},
            {"couch", "bookshelf"}, {"tv", "chair"}, {"plant", "table"}};
        for (auto [a, b] : weak) t.set(a, b, 0.4);
        return t;
    }

    void set(const std::string& a, const std::string& b, double score) {
        check(score);
        entries_[key(a, b)] = score;
    }
    void set_missing(double score) { check(score); missing_ = score; }
    void set_self(double score) { check(score); self_ = score; }

    double raw(const std::string& category, const std::string& target) const {
        if (category == target) return self_;
        auto it = entries_.find(key(category, target));
        return it == entries_.end() ? missing_ : it->second;
    }

    /// Raw score mapped onto [0, 1] by the table's own range, so uniform affine rescaling changes nothing.
    double normalized(const std::string& category, const std::string& target) const {
        double lo = std::min(missing_, self_), hi = std::max(missing_, self_);
        for (const auto& [k, v] : entries_) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo < 1e-12) return 0.0;
        return (raw(category, target) - lo) / (hi - lo);
    }

    const std::map<std::pair<std::string, std::string>, double>& entries() const { return entries_; }
    double missing() const { return missing_; }
    double self_score() const { return self_; }

private:
    static std::pair<std::string, std::string> key(const std::string& a, const std::string& b) {
        return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    }
    static void check(double s) {
        if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::Config, "relatedness scores must lie in [0, 1]");
    }

    std::map<std::pair<std::string, std::string>, double> entries_;
    double missing_ = 0.0;
    double self_ = 1.0;
};

/// Per-cell visit counts. The runner stamps a disc around the agent after every action.
class VisitGrid {
public:
    static constexpr double kStampRadius = 1.0;
    static constexpr double kNoveltyRadius = 2.0;

    VisitGrid() = default;
    explicit VisitGrid(const FloorPlan& plan)
        : width_(plan.width()), height_(plan.height()), cell_size_(plan.cell_size()), origin_(plan.origin()),
          counts_(static_cast<std::size_t>(width_) * height_, 0) {}

    int count(Cell c) const { return in_bounds(c) ? counts_[index(c)] : 0; }

    void stamp(Vec2 p, double radius = kStampRadius) {
        for_disc(p, radius, [&](Cell c) { ++counts_[index(c)]; });
    }

    /// Fraction of in-bounds cells within `radius` of `p` that were never visited.
    double novelty(Vec2 p, double radius = kNoveltyRadius) const {
        std::size_t total = 0, fresh = 0;
        for_disc(p, radius, [&](Cell c) {
            ++total;
            if (counts_[index(c)] == 0) ++fresh;
        });
        return total ? static_cast<double>(fresh) / static_cast<double>(total) : 0.0;
    }

private:
    bool in_bounds(Cell c) const { return c.i >= 0 && c.j >= 0 && c.i < width_ && c.j < height_; }
    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.j) * width_ + c.i; }

    template <typename F>
    void for_disc(Vec2 p, double radius, F&& f) const {
        const double gx = (p.x - origin_.x) / cell_size_, gy = (p.y - origin_.y) / cell_size_;
        const int r = static_cast<int>(std::ceil(radius / cell_size_)) + 1;
        const int ci = static_cast<int>(std::floor(gx)), cj = static_cast<int>(std::floor(gy));
        for (int j = cj - r; j <= cj + r; ++j)
            for (int i = ci - r; i <= ci + r; ++i) {
                Cell c{i, j};
                if (!in_bounds(c)) continue;
                double cx = origin_.x + (i + 0.5) * cell_size_, cy = origin_.y + (j + 0.5) * cell_size_;
                if (std::hypot(cx - p.x, cy - p.y) <= radius + 1e-9) f(c);
            }
    }

    int width_ = 0, height_ = 0;
    double cell_size_ = 0.25;
    Vec2 origin_;
    std::vector<int> counts_;
};

struct HeuristicBreakdown {
    bool target_visible = false;
    double relatedness = 0.0;
    std::string related_category;
    double novelty = 0.0;

    double total() const { return (target_visible ? 10.0 : 0.0) + relatedness + 0.5 * novelty; }
};

inline HeuristicBreakdown heuristic_breakdown(const Candidate& c, const std::string& target, const VisitGrid& visits,
                                              const RelatednessTable& table) {
    HeuristicBreakdown b;
    b.target_visible = c.imagined.sees_category(target);
    for (const auto& cat : c.imagined.visible_categories()) {
        double r = table.normalized(cat, target);
        if (b.related_category.empty() || r > b.relatedness) {
            b.relatedness = r;
            b.related_category = cat;
        }
    }
    b.novelty = visits.novelty(position(c.waypoint));
    return b;
}

inline Decision score_heuristic(const std::vector<Candidate>& candidates, const std::string& target,
                                const VisitGrid& visits, const RelatednessTable& table = RelatednessTable::defaults()) {
    if (candidates.empty()) throw Error(ErrorCode::Config, "no candidates to score");
    std::size_t best = 0;
    HeuristicBreakdown best_b = heuristic_breakdown(candidates[0], target, visits, table);
    for (std::size_t k = 1; k < candidates.size(); ++k) {
        HeuristicBreakdown b = heuristic_breakdown(candidates[k], target, visits, table);
        bool better = b.total() > best_b.total() + 1e-9;
        bool tie_lower = std::fabs(b.total() - best_b.total()) <= 1e-9 && candidates[k].label < candidates[best].label;
        if (better || tie_lower) {
            best = k;
            best_b = b;
        }
    }
    std::ostringstream why;
    if (best_b.target_visible) why << target << " visible";
    else if (!best_b.related_category.empty() && best_b.relatedness > 0.0) why << best_b.related_category << " is often near " << target;
    else why << "most unexplored space";
    return {candidates[best].label, why.str(), "heuristic", std::nullopt};
}

// ---------------------------------------------------------------------------
// Vision-language model protocol

namespace detail {

inline std::string hex(const unsigned char* data, std::size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back(digits[data[k] >> 4]);
        out.push_back(digits[data[k] & 0xF]);
    }
    return out;
}

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
}

}  // namespace detail

inline std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::Format, "sha256 failed");
    return detail::hex(md, len);
}

inline std::string base64_encode(std::string_view data) {
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                            reinterpret_cast<const unsigned char*>(data.data()), static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

struct PromptText {
    std::string system;
    std::string user;
};

inline PromptText render_prompt(const std::string& target, const std::vector<std::string>& labels,
                                std::string_view tmpl = kPromptTemplate) {
    const std::string_view sys_tag = "[system]\n", user_tag = "[user]\n";
    std::size_t s = tmpl.find(sys_tag), u = tmpl.find(user_tag);
    if (s == std::string_view::npos || u == std::string_view::npos || u < s)
        throw Error(ErrorCode::Config, "prompt template needs [system] and [user] sections");
    std::string joined;
    for (std::size_t k = 0; k < labels.size(); ++k) joined += (k ? ", " : "") + labels[k];
    PromptText p{std::string(tmpl.substr(s + sys_tag.size(), u - s - sys_tag.size())),
                 std::string(tmpl.substr(u + user_tag.size()))};
    for (std::string* part : {&p.system, &p.user}) {
        while (!part->empty() && part->back() == '\n') part->pop_back();
        detail::replace_all(*part, "{target}", target);
        detail::replace_all(*part, "{labels}", joined);
    }
    return p;
}

struct VlmSettings {
    std::string url;
    std::string api_key;
    std::string model = "gpt-4o-mini";
    int retry_limit = 3;
    double backoff_seconds = 0.5;
    double timeout_seconds = 60.0;
    std::string cache_dir;  // replay source, or where live responses are recorded
};

/// Reads IMAGINENAV_VLM_URL, IMAGINENAV_VLM_API_KEY and IMAGINENAV_VLM_MODEL over the given settings.
inline VlmSettings vlm_settings_from_env(VlmSettings base = {}) {
    if (const char* v = std::getenv("IMAGINENAV_VLM_URL")) base.url = v;
    if (const char* v = std::getenv("IMAGINENAV_VLM_API_KEY")) base.api_key = v;
    if (const char* v = std::getenv("IMAGINENAV_VLM_MODEL")) base.model = v;
    return base;
}

/// Chat-completions request body: a system message, then one user message holding a text part and the
/// stitched candidate image. Attempts after the first carry a format reminder.
inline std::string build_vlm_request(const std::vector<Candidate>& candidates, const std::string& target,
                                     const std::string& model, int attempt = 0) {
    std::vector<std::string> labels;
    std::vector<View> views;
    for (const auto& c : candidates) {
        labels.push_back(c.label);
        views.push_back(c.imagined);
    }
    PromptText prompt = render_prompt(target, labels);
    if (attempt > 0) prompt.user += "\n" + std::string(kFormatReminder);
    const std::string image = "data:image/png;base64," + base64_encode(rasterize(views, labels));
    nlohmann::json body = {
        {"model", model},
        {"temperature", 0},
        {"messages",
         nlohmann::json::array(
             {{{"role", "system"}, {"content", prompt.system}},
              {{"role", "user"},
               {"content", nlohmann::json::array({{{"type", "text"}, {"text", prompt.user}},
                                                  {{"type", "image_url"}, {"image_url", {{"url", image}}}}})}}})},
    };
    return body.dump();
}

/// Text of the first choice in a chat-completions response, or nullopt if the body has another shape.
inline std::optional<std::string> response_content(const std::string& body) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
        j["choices"].empty())
        return std::nullopt;
    const auto& msg = j["choices"][0].value("message", nlohmann::json::object());
    if (!msg.is_object() || !msg.contains("content")) return std::nullopt;
    const auto& content = msg["content"];
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
        std::string text;
        for (const auto& part : content)
            if (part.is_object() && part.value("type", "") == "text" && part.contains("text") &&
                part["text"].is_string())
                text += part["text"].get<std::string>();
        return text;
    }
    return std::nullopt;
}

/// Finds the first balanced JSON object in free text and reads its Choice/Reason. The choice must be one
/// of `labels` (case and surrounding blanks are ignored).
inline std::optional<std::pair<std::string, std::string>> parse_choice(std::string_view text,
                                                                       const std::vector<std::string>& labels) {
    for (std::size_t open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
        int depth = 0;
        bool in_string = false, escaped = false;
        std::size_t close = std::string_view::npos;
        for (std::size_t k = open; k < text.size(); ++k) {
            char ch = text[k];
            if (in_string) {
                if (escaped) escaped = false;
                else if (ch == '\\') escaped = true;
                else if (ch == '"') in_string = false;
                continue;
            }
            if (ch == '"') in_string = true;
            else if (ch == '{') ++depth;
            else if (ch == '}' && --depth == 0) {
                close = k;
                break;
            }
        }
        if (close == std::string_view::npos) continue;
        nlohmann::json j = nlohmann::json::parse(text.substr(open, close - open + 1), nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("Choice")) continue;
        if (!j["Choice"].is_string()) return std::nullopt;
        std::string choice = j["Choice"].get<std::string>();
        choice.erase(0, choice.find_first_not_of(" \t\r\n"));
        choice.erase(choice.find_last_not_of(" \t\r\n") + 1);
        for (char& ch : choice) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (std::find(labels.begin(), labels.end(), choice) == labels.end()) return std::nullopt;
        std::string reason = j.contains("Reason") && j["Reason"].is_string() ? j["Reason"].get<std::string>() : "";
        return std::make_pair(choice, reason);
    }
    return std::nullopt;
}

struct HttpReply {
    int status = 0;
    std::string body;
};

class VlmTransport {
public:
    virtual ~VlmTransport() = default;
    /// Network or I/O failures throw Error(Transport); HTTP errors are returned as a status.
    virtual HttpReply post(const std::string& body) = 0;
    virtual std::string name() const = 0;
};

namespace detail {

inline std::filesystem::path cache_file(const std::string& dir, const std::string& request_body) {
    return std::filesystem::path(dir) / (sha256_hex(request_body) + ".json");
}

}  // namespace detail

/// Serves recorded responses keyed by the SHA-256 of the request body. Never touches the network.
class ReplayTransport : public VlmTransport {
public:
    explicit ReplayTransport(std::string dir) : dir_(std::move(dir)) {}

    HttpReply post(const std::string& body) override {
        auto path = detail::cache_file(dir_, body);
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::ReplayMiss, "no recorded response " + path.string());
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.contains("response_body"))
            throw Error(ErrorCode::Format, "malformed replay entry " + path.string());
        return {j.value("status", 200), j["response_body"].get<std::string>()};
    }
    std::string name() const override { return "replay"; }

private:
    std::string dir_;
};

/// Forwards to another transport and stores each exchange in replay format.
class RecordingTransport : public VlmTransport {
public:
    RecordingTransport(std::shared_ptr<VlmTransport> inner, std::string dir)
        : inner_(std::move(inner)), dir_(std::move(dir)) {}

    HttpReply post(const std::string& body) override {
        HttpReply reply = inner_->post(body);
        std::filesystem::create_directories(dir_);
        nlohmann::json entry = {{"request_sha256", sha256_hex(body)}, {"status", reply.status},
                                {"response_body", reply.body}};
        std::ofstream(detail::cache_file(dir_, body)) << entry.dump(2) << "\n";
        return reply;
    }
    std::string name() const override { return inner_->name(); }

private:
    std::shared_ptr<VlmTransport> inner_;
    std::string dir_;
};

namespace detail {

/// Sends with exponential backoff on 5xx, 429 and transport failures. 401/403 fail at once.
inline HttpReply send_with_backoff(VlmTransport& transport, const std::string& body, const VlmSettings& s) {
    std::string last = "no attempt made";
    for (int attempt = 0; attempt < std::max(1, s.retry_limit); ++attempt) {
        if (attempt > 0 && s.backoff_seconds > 0.0)
            std::this_thread::sleep_for(std::chrono::duration<double>(s.backoff_seconds * (1 << (attempt - 1))));
        HttpReply reply;
        try {
            reply = transport.post(body);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Transport) throw;
            last = e.what();
            continue;
        }
        if (reply.status == 401 || reply.status == 403)
            throw Error(ErrorCode::AuthError, "endpoint rejected credentials (HTTP " + std::to_string(reply.status) + ")");
        if (reply.status >= 500 || reply.status == 429) {
            last = "HTTP " + std::to_string(reply.status);
            continue;
        }
        if (reply.status < 200 || reply.status >= 300)
            throw Error(ErrorCode::Transport, "endpoint returned HTTP " + std::to_string(reply.status));
        return reply;
    }
    throw Error(ErrorCode::Transport, "giving up after retries: " + last);
}

}  // namespace detail

/// Asks the model to pick a candidate. Unusable answers are retried with a format reminder; once
/// `retry_limit` answers have failed, the heuristic decides and the decision is marked "fallback".
inline Decision score_vlm(const std::vector<Candidate>& candidates, const std::string& target,
                          const VlmSettings& settings, VlmTransport& transport, const VisitGrid& visits,
                          const RelatednessTable& table = RelatednessTable::defaults()) {
    if (settings.retry_limit < 1) throw Error(ErrorCode::Config, "retry_limit must be >= 1");
    std::vector<std::string> labels;
    for (const auto& c : candidates) labels.push_back(c.label);
    std::optional<std::string> last_raw;
    for (int attempt = 0; attempt < settings.retry_limit; ++attempt) {
        std::string body = build_vlm_request(candidates, target, settings.model, attempt);
        HttpReply reply = detail::send_with_backoff(transport, body, settings);
        last_raw = reply.body;
        if (auto content = response_content(reply.body)) {
            if (auto parsed = parse_choice(*content, labels))
                return {parsed->first, parsed->second, transport.name() == "replay" ? "replay" : "vlm", reply.body};
        }
    }
    Decision d = score_heuristic(candidates, target, visits, table);
    d.scorer_id = "fallback";
    d.raw_response = last_raw;
    return d;
}

// ---------------------------------------------------------------------------
// Scorer handles

enum class ScorerKind { Heuristic, Vlm, Replay };

inline std::string_view to_string(ScorerKind k) {
    switch (k) {
        case ScorerKind::Heuristic: return "heuristic";
        case ScorerKind::Vlm: return "vlm";
        case ScorerKind::Replay: return "replay";
    }
    return "?";
}

inline ScorerKind scorer_kind_from_string(std::string_view s) {
    for (ScorerKind k : {ScorerKind::Heuristic, ScorerKind::Vlm, ScorerKind::Replay})
        if (to_string(k) == s) return k;
    throw Error(ErrorCode::Config, "unknown scorer '" + std::string(s) + "'");
}

class Scorer {
public:
    virtual ~Scorer() = default;
    virtual Decision choose(const std::vector<Candidate>& candidates, const std::string& target,
                            const VisitGrid& visits) = 0;
};

class HeuristicScorer : public Scorer {
public:
    explicit HeuristicScorer(RelatednessTable table = RelatednessTable::defaults()) : table_(std::move(table)) {}
    Decision choose(const std::vector<Candidate>& candidates, const std::string& target,
                    const VisitGrid& visits) override {
        return score_heuristic(candidates, target, visits, table_);
    }

private:
    RelatednessTable table_;
};

class VlmScorer : public Scorer {
public:
    VlmScorer(VlmSettings settings, std::shared_ptr<VlmTransport> transport,
              RelatednessTable table = RelatednessTable::defaults())
        : settings_(std::move(settings)), transport_(std::move(transport)), table_(std::move(table)) {}
    Decision choose(const std::vector<Candidate>& candidates, const std::string& target,
                    const VisitGrid& visits) override {
        return score_vlm(candidates, target, settings_, *transport_, visits, table_);
    }

private:
    VlmSettings settings_;
    std::shared_ptr<VlmTransport> transport_;
    RelatednessTable table_;
};

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const Decision& d) {
    j = {{"choice", d.choice}, {"reason", d.reason}, {"scorer_id", d.scorer_id}};
    if (d.raw_response) j["raw_response"] = *d.raw_response;
}
inline void from_json(const nlohmann::json& j, Decision& d) {
    d.choice = j.at("choice").get<std::string>();
    d.reason = j.value("reason", "");
    d.scorer_id = j.value("scorer_id", "");
    d.raw_response = j.contains("raw_response") ? std::optional<std::string>(j["raw_response"].get<std::string>())
                                                : std::nullopt;
}

inline nlohmann::json relatedness_to_json(const RelatednessTable& t) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [k, v] : t.entries()) pairs.push_back({k.first, k.second, v});
    return {{"pairs", pairs}, {"missing", t.missing()}, {"self", t.self_score()}};
}

inline RelatednessTable relatedness_from_json(const nlohmann::json& j) {
    RelatednessTable t;
    for (const auto& p : j.at("pairs")) t.set(p.at(0).get<std::string>(), p.at(1).get<std::string>(), p.at(2).get<double>());
    t.set_missing(j.value("missing", 0.0));
    t.set_self(j.value("self", 1.0));
    return t;
}

}  // namespace imaginenav
