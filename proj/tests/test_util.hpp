#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fundus/image.hpp"

namespace testutil {

inline fundus::ImageBuffer random_u8_image(std::mt19937_64& rng, int w, int h, int ch) {
    auto img = fundus::ImageBuffer::u8(w, h, ch);
    std::uniform_int_distribution<int> dist(0, 255);
    for (auto& s : img.u8_samples()) s = static_cast<std::uint8_t>(dist(rng));
    return img;
}

inline fundus::ImageBuffer random_f32_image(std::mt19937_64& rng, int w, int h, int ch) {
    auto img = fundus::ImageBuffer::f32(w, h, ch);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    for (auto& s : img.f32_samples()) s = dist(rng);
    return img;
}

// Disc on a gradient background with speckle noise; vaguely eye-like, enough
// texture for enhancement and flip checks to be meaningful.
inline fundus::ImageBuffer synthetic_fundus(std::uint64_t seed, int size) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> noise(-18, 18);
    auto img = fundus::ImageBuffer::u8(size, size, 3);
    const double cx = size / 2.0, cy = size / 2.0, radius = size * 0.45;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double d = std::hypot(x - cx, y - cy);
            const bool inside = d < radius;
            const double shade = inside ? 1.0 - 0.6 * d / radius : 0.0;
            const int vessel =
                inside && (std::abs(std::sin(0.13 * x) * 40 - (y - cy)) < 2.5) ? -60 : 0;
            auto px = [&](double base) {
                const int v = static_cast<int>(base * shade) + vessel + noise(rng);
                return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
            };
            img.set_u8(x, y, 0, px(190));
            img.set_u8(x, y, 1, px(120));
            img.set_u8(x, y, 2, px(60));
        }
    return img;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("fundus_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline std::vector<char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

} // namespace testutil
