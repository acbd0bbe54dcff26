#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "imaginenav/core.hpp"

namespace imaginenav {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline Rgb hsv_to_rgb(double hue_deg, double s, double v) {
    double h = normalize_heading(hue_deg) / 60.0;
    double c = v * s;
    double x = c * (1.0 - std::fabs(std::fmod(h, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h)) {
        case 0: r = c; g = x; break;
        case 1: r = x; g = c; break;
        case 2: g = c; b = x; break;
        case 3: g = x; b = c; break;
        case 4: r = x; b = c; break;
        default: r = c; b = x; break;
    }
    double m = v - c;
    auto q = [](double u) { return static_cast<std::uint8_t>(std::lround(std::clamp(u, 0.0, 1.0) * 255.0)); };
    return {q(r + m), q(g + m), q(b + m)};
}

/// Hue in degrees; -1 for achromatic pixels.
inline double rgb_hue(Rgb c) {
    double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
    double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    double d = mx - mn;
    if (d < 1e-9) return -1.0;
    double h;
    if (mx == r) h = std::fmod((g - b) / d, 6.0);
    else if (mx == g) h = (b - r) / d + 2.0;
    else h = (r - g) / d + 4.0;
    return normalize_heading(h * 60.0);
}

/// Stable hue per category name; the household palette gets well-separated hues.
inline double category_hue(std::string_view category) {
    static constexpr std::array<std::pair<std::string_view, double>, 15> kKnown{{
        {"couch", 0}, {"tv", 200}, {"plant", 120}, {"chair", 30}, {"bed", 300},
        {"wardrobe", 270}, {"nightstand", 330}, {"refrigerator", 180}, {"oven", 15},
        {"sink", 220}, {"table", 50}, {"toilet", 160}, {"bathtub", 240}, {"desk", 75},
        {"bookshelf", 95},
    }};
    for (const auto& [name, hue] : kKnown)
        if (name == category) return hue;
    std::uint32_t h = 2166136261u;
    for (char ch : category) h = (h ^ static_cast<std::uint8_t>(ch)) * 16777619u;
    return static_cast<double>(h % 72u) * 5.0 + 2.5;
}

namespace detail {

// 5x7 glyphs, one byte per row, MSB of the low five bits is the leftmost pixel.
inline const std::array<std::uint8_t, 7>* glyph(char ch) {
    static const std::array<std::uint8_t, 7> kLetters[26] = {
        {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
        {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E},
        {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
        {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
        {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
        {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
        {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
        {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
        {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
        {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
        {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
        {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
        {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},
    };
    static const std::array<std::uint8_t, 7> kDigits[10] = {
        {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
        {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
        {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
        {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
        {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
    };
    static const std::array<std::uint8_t, 7> kUnderscore{0, 0, 0, 0, 0, 0, 0x1F};
    static const std::array<std::uint8_t, 7> kDash{0, 0, 0, 0x1F, 0, 0, 0};
    static const std::array<std::uint8_t, 7> kDot{0, 0, 0, 0, 0, 0x0C, 0x0C};
    static const std::array<std::uint8_t, 7> kColon{0, 0x0C, 0x0C, 0, 0x0C, 0x0C, 0};
    if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
    if (ch >= 'A' && ch <= 'Z') return &kLetters[ch - 'A'];
    if (ch >= '0' && ch <= '9') return &kDigits[ch - '0'];
    switch (ch) {
        case '_': return &kUnderscore;
        case '-': return &kDash;
        case '.': return &kDot;
        case ':': return &kColon;
        default: return nullptr;
    }
}

inline void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>(v & 0xFF));
}

inline void put_chunk(std::string& out, const char* type, const std::string& data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    std::string body(type, 4);
    body += data;
    out += body;
    put_u32(out, static_cast<std::uint32_t>(
                     crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

}  // namespace detail

/// 8-bit RGB raster, row 0 at the top.
class Image {
public:
    static constexpr int kGlyphAdvance = 6;

    Image() = default;
    Image(int width, int height, Rgb fill = {}) : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }

    Rgb at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    void set(int x, int y, Rgb c) {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
        pixels_[static_cast<std::size_t>(y) * width_ + x] = c;
    }

    void fill_rect(int x0, int y0, int w, int h, Rgb c) {
        for (int y = y0; y < y0 + h; ++y)
            for (int x = x0; x < x0 + w; ++x) set(x, y, c);
    }

    void draw_line(int x0, int y0, int x1, int y1, Rgb c) {
        int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
        int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            set(x0, y0, c);
            if (x0 == x1 && y0 == y1) break;
            int e2 = 2 * err;
            if (e2 >= dy) { err += dy; x0 += sx; }
            if (e2 <= dx) { err += dx; y0 += sy; }
        }
    }

    /// Draws text with the built-in 5x7 font; unknown characters render as blanks.
    void draw_text(int x, int y, std::string_view text, Rgb c) {
        for (char ch : text) {
            if (const auto* g = detail::glyph(ch)) {
                for (int row = 0; row < 7; ++row)
                    for (int col = 0; col < 5; ++col)
                        if ((*g)[static_cast<std::size_t>(row)] & (0x10 >> col)) set(x + col, y + row, c);
            }
            x += kGlyphAdvance;
        }
    }

    void blit(const Image& src, int x0, int y0) {
        for (int y = 0; y < src.height(); ++y)
            for (int x = 0; x < src.width(); ++x) set(x0 + x, y0 + y, src.at(x, y));
    }

    /// Encodes as an 8-bit truecolor PNG. Deterministic for identical pixels.
    std::string encode_png() const {
        std::string raw;
        raw.reserve(static_cast<std::size_t>(height_) * (1 + 3 * width_));
        for (int y = 0; y < height_; ++y) {
            raw.push_back('\0');  // filter: none
            for (int x = 0; x < width_; ++x) {
                Rgb c = at(x, y);
                raw.push_back(static_cast<char>(c.r));
                raw.push_back(static_cast<char>(c.g));
                raw.push_back(static_cast<char>(c.b));
            }
        }
        uLongf bound = compressBound(static_cast<uLong>(raw.size()));
        std::string deflated(bound, '\0');
        if (compress2(reinterpret_cast<Bytef*>(deflated.data()), &bound,
                      reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()), 9) != Z_OK)
            throw Error(ErrorCode::Format, "zlib compression failed");
        deflated.resize(bound);

        std::string png("\x89PNG\r\n\x1a\n", 8);
        std::string ihdr;
        detail::put_u32(ihdr, static_cast<std::uint32_t>(width_));
        detail::put_u32(ihdr, static_cast<std::uint32_t>(height_));
        ihdr += std::string("\x08\x02\x00\x00\x00", 5);
        detail::put_chunk(png, "IHDR", ihdr);
        detail::put_chunk(png, "IDAT", deflated);
        detail::put_chunk(png, "IEND", {});
        return png;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
};

}  // namespace imaginenav
