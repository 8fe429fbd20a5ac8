#include "fundus/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fundus {

namespace {

int reflect101(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

std::vector<double> gaussian_taps(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        sum += taps[i + radius];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

std::uint8_t round_to_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// One channel plane as doubles (raw 0..255 for U8 sources).
std::vector<double> channel_plane(const ImageBuffer& img, int c) {
    std::vector<double> plane(static_cast<std::size_t>(img.width()) * img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            plane[static_cast<std::size_t>(y) * img.width() + x] =
                img.depth() == SampleDepth::U8 ? img.at_u8(x, y, c) : img.at_f32(x, y, c);
    return plane;
}

std::vector<double> blur_plane(const std::vector<double>& src, int w, int h,
                               const std::vector<double>& taps) {
    const int radius = static_cast<int>(taps.size()) / 2;
    std::vector<double> mid(src.size()), dst(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += taps[k + radius] * src[static_cast<std::size_t>(y) * w + reflect101(x + k, w)];
            mid[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += taps[k + radius] * mid[static_cast<std::size_t>(reflect101(y + k, h)) * w + x];
            dst[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return dst;
}

} // namespace

ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma) {
    if (!(sigma > 0.0)) throw ContractError("gaussian_blur requires sigma > 0");
    const auto taps = gaussian_taps(sigma);
    const bool is_u8 = img.depth() == SampleDepth::U8;
    ImageBuffer out = img;
    for (int c = 0; c < img.channels(); ++c) {
        const auto blurred = blur_plane(channel_plane(img, c), img.width(), img.height(), taps);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const double v = blurred[static_cast<std::size_t>(y) * img.width() + x];
                if (is_u8)
                    out.set_u8(x, y, c, round_to_u8(v));
                else
                    out.set_f32(x, y, c, static_cast<float>(v));
            }
    }
    return out;
}

ImageBuffer ben_enhance(const ImageBuffer& img, const BenParams& p) {
    double sigma;
    if (p.sigma) {
        sigma = *p.sigma;
        if (!(sigma > 0.0)) throw ContractError("ben_enhance requires sigma > 0");
    } else {
        sigma = std::max(img.width(), img.height()) / 30.0;
    }
    const auto taps = gaussian_taps(sigma);
    const bool is_u8 = img.depth() == SampleDepth::U8;
    ImageBuffer out = img;
    for (int c = 0; c < img.channels(); ++c) {
        const auto plane = channel_plane(img, c);
        const auto blurred = blur_plane(plane, img.width(), img.height(), taps);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * img.width() + x;
                const double v = p.alpha * plane[i] + p.beta * blurred[i] + p.bias;
                if (is_u8)
                    out.set_u8(x, y, c, round_to_u8(v));
                else
                    out.set_f32(x, y, c, static_cast<float>(v));
            }
    }
    return out;
}

namespace {

struct TileGrid {
    int tiles_x, tiles_y;
    int base_w, base_h;
    int width, height;

    int x0(int tx) const { return tx * base_w; }
    int y0(int ty) const { return ty * base_h; }
    int tile_w(int tx) const { return tx == tiles_x - 1 ? width - x0(tx) : base_w; }
    int tile_h(int ty) const { return ty == tiles_y - 1 ? height - y0(ty) : base_h; }
    double center_x(int tx) const { return x0(tx) + (tile_w(tx) - 1) / 2.0; }
    double center_y(int ty) const { return y0(ty) + (tile_h(ty) - 1) / 2.0; }
};

TileGrid make_grid(const ImageBuffer& img, const ClaheParams& p) {
    if (p.tiles_x < 1 || p.tiles_y < 1) throw ContractError("clahe tile counts must be >= 1");
    if (!(p.clip_limit >= 1.0)) throw ContractError("clahe clip_limit must be >= 1");
    if (p.tiles_x > img.width() || p.tiles_y > img.height())
        throw ContractError("clahe tile grid exceeds image dimensions");
    return {p.tiles_x, p.tiles_y, img.width() / p.tiles_x, img.height() / p.tiles_y,
            img.width(), img.height()};
}

std::vector<int> tile_mapping(const ImageBuffer& plane, int c, const TileGrid& g, int tx, int ty,
                              double clip_limit) {
    const int x0 = g.x0(tx), y0 = g.y0(ty), tw = g.tile_w(tx), th = g.tile_h(ty);
    const double tile_pixels = static_cast<double>(tw) * th;

    double hist[256] = {};
    for (int y = y0; y < y0 + th; ++y)
        for (int x = x0; x < x0 + tw; ++x) hist[plane.at_u8(x, y, c)] += 1.0;

    const double threshold = clip_limit * tile_pixels / 256.0;
    double excess = 0.0;
    for (double& b : hist) {
        if (b > threshold) {
            excess += b - threshold;
            b = threshold;
        }
    }
    const double add = excess / 256.0;

    std::vector<int> mapping(256);
    double cum = 0.0;
    for (int v = 0; v < 256; ++v) {
        cum += hist[v] + add;
        mapping[v] = static_cast<int>(std::lround(255.0 * (cum / tile_pixels)));
    }
    return mapping;
}

// Segment lookup along one axis of tile centers: returns (lo, hi, weight).
struct Seg {
    int lo, hi;
    double w;
};

template <typename CenterFn>
Seg segment(int coord, int tiles, CenterFn center) {
    if (tiles == 1 || coord <= center(0)) return {0, 0, 0.0};
    if (coord >= center(tiles - 1)) return {tiles - 1, tiles - 1, 0.0};
    int lo = 0;
    while (lo + 1 < tiles && center(lo + 1) <= coord) ++lo;
    const double c0 = center(lo), c1 = center(lo + 1);
    return {lo, lo + 1, (coord - c0) / (c1 - c0)};
}

} // namespace

std::vector<std::vector<std::vector<int>>> clahe_tile_mappings(const ImageBuffer& plane,
                                                               const ClaheParams& p) {
    if (plane.depth() != SampleDepth::U8) throw ContractError("clahe requires a U8 image");
    const TileGrid g = make_grid(plane, p);
    std::vector<std::vector<std::vector<int>>> maps(g.tiles_y);
    for (int ty = 0; ty < g.tiles_y; ++ty) {
        maps[ty].resize(g.tiles_x);
        for (int tx = 0; tx < g.tiles_x; ++tx)
            maps[ty][tx] = tile_mapping(plane, 0, g, tx, ty, p.clip_limit);
    }
    return maps;
}

ImageBuffer clahe(const ImageBuffer& img, const ClaheParams& p) {
    if (img.depth() != SampleDepth::U8) throw ContractError("clahe requires a U8 image");
    const TileGrid g = make_grid(img, p);

    ImageBuffer out = img;
    for (int c = 0; c < img.channels(); ++c) {
        std::vector<std::vector<std::vector<int>>> maps(g.tiles_y);
        for (int ty = 0; ty < g.tiles_y; ++ty) {
            maps[ty].resize(g.tiles_x);
            for (int tx = 0; tx < g.tiles_x; ++tx)
                maps[ty][tx] = tile_mapping(img, c, g, tx, ty, p.clip_limit);
        }
        for (int y = 0; y < img.height(); ++y) {
            const Seg sy = segment(y, g.tiles_y, [&](int t) { return g.center_y(t); });
            for (int x = 0; x < img.width(); ++x) {
                const Seg sx = segment(x, g.tiles_x, [&](int t) { return g.center_x(t); });
                const int v = img.at_u8(x, y, c);
                const double m00 = maps[sy.lo][sx.lo][v];
                const double m10 = maps[sy.lo][sx.hi][v];
                const double m01 = maps[sy.hi][sx.lo][v];
                const double m11 = maps[sy.hi][sx.hi][v];
                const double m = (1.0 - sy.w) * ((1.0 - sx.w) * m00 + sx.w * m10) +
                                 sy.w * ((1.0 - sx.w) * m01 + sx.w * m11);
                out.set_u8(x, y, c, round_to_u8(m));
            }
        }
    }
    return out;
}

ImageBuffer green_ben(const ImageBuffer& img, const BenParams& p, bool replicate) {
    if (img.channels() != 3 || img.depth() != SampleDepth::U8)
        throw ContractError("green_ben requires a 3-channel U8 image");
    ImageBuffer out = ben_enhance(extract_green(img), p);
    return replicate ? replicate_to_rgb(out) : out;
}

ImageBuffer green_clahe(const ImageBuffer& img, const ClaheParams& p, bool replicate) {
    if (img.channels() != 3 || img.depth() != SampleDepth::U8)
        throw ContractError("green_clahe requires a 3-channel U8 image");
    ImageBuffer out = clahe(extract_green(img), p);
    return replicate ? replicate_to_rgb(out) : out;
}

} // namespace fundus
