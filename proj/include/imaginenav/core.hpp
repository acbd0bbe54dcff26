#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace imaginenav {

enum class ErrorCode {
    SpecInfeasible,
    OutOfBounds,
    NoTarget,
    NoValidStart,
    PoseOccupied,
    EmptyDataset,
    Degenerate,
    NoFreeCell,
    Transport,
    AuthError,
    ReplayMiss,
    BadEpisode,
    Config,
    Format,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::SpecInfeasible: return "SpecInfeasible";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::NoTarget: return "NoTarget";
        case ErrorCode::NoValidStart: return "NoValidStart";
        case ErrorCode::PoseOccupied: return "PoseOccupied";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::Degenerate: return "Degenerate";
        case ErrorCode::NoFreeCell: return "NoFreeCell";
        case ErrorCode::Transport: return "Transport";
        case ErrorCode::AuthError: return "AuthError";
        case ErrorCode::ReplayMiss: return "ReplayMiss";
        case ErrorCode::BadEpisode: return "BadEpisode";
        case ErrorCode::Config: return "Config";
        case ErrorCode::Format: return "Format";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle in degrees into [0, 360).
inline double normalize_heading(double deg) {
    double h = std::fmod(deg, 360.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    return h;
}

/// Wraps an angle difference in degrees into (-180, 180].
inline double wrap_angle(double deg) {
    double a = std::fmod(deg + 180.0, 360.0);
    if (a <= 0.0) a += 360.0;
    return a - 180.0;
}

/// Agent state in the world frame. x east, y north, heading CCW from +x.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;

    Pose() = default;
    Pose(double x_, double y_, double heading_deg)
        : x(x_), y(y_), heading(normalize_heading(heading_deg)) {}

    Pose rotated(double delta_deg) const { return {x, y, heading + delta_deg}; }

    friend bool operator==(const Pose&, const Pose&) = default;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline Vec2 position(const Pose& p) { return {p.x, p.y}; }

struct Cell {
    int i = 0;  // column, grows east
    int j = 0;  // row, grows north

    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell& a, const Cell& b) {
        if (auto c = a.j <=> b.j; c != 0) return c;
        return a.i <=> b.i;
    }
};

/// splitmix64 step; used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2) + b * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace imaginenav
