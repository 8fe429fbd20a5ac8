#pragma once

// Independent reference implementations used as test oracles. Everything in
// here is deliberately straight-line and unshared with the library: plain
// loops over plain containers, recomputed from first principles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fundus/image.hpp"
#include "fundus/metrics.hpp"

namespace oracle {

// ------------------------------------------------------------ gaussian

inline int reflect101(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

inline std::vector<double> gauss_taps(double sigma) {
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

// Direct (non-separable) 2-D convolution with the outer-product kernel.
inline std::vector<double> blur2d_direct(const std::vector<double>& plane, int w, int h,
                                         double sigma) {
    const auto taps = gauss_taps(sigma);
    const int radius = static_cast<int>(taps.size()) / 2;
    std::vector<double> out(plane.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int ky = -radius; ky <= radius; ++ky)
                for (int kx = -radius; kx <= radius; ++kx) {
                    const double weight = taps[ky + radius] * taps[kx + radius];
                    acc += weight *
                           plane[static_cast<std::size_t>(reflect101(y + ky, h)) * w +
                                 reflect101(x + kx, w)];
                }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return out;
}

inline std::vector<double> plane_of(const fundus::ImageBuffer& img, int c) {
    std::vector<double> plane(static_cast<std::size_t>(img.width()) * img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            plane[static_cast<std::size_t>(y) * img.width() + x] =
                img.depth() == fundus::SampleDepth::U8 ? img.at_u8(x, y, c) : img.at_f32(x, y, c);
    return plane;
}

inline std::uint8_t clamp_round_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// alpha*I + beta*blur2d(I) + bias per channel, clamped and rounded.
inline fundus::ImageBuffer ben_ref(const fundus::ImageBuffer& img, double sigma, double alpha,
                                   double beta, double bias) {
    auto out = img;
    for (int c = 0; c < img.channels(); ++c) {
        const auto plane = plane_of(img, c);
        const auto blurred = blur2d_direct(plane, img.width(), img.height(), sigma);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * img.width() + x;
                out.set_u8(x, y, c, clamp_round_u8(alpha * plane[i] + beta * blurred[i] + bias));
            }
    }
    return out;
}

// ------------------------------------------------------------ clahe

// Straight-line contrast-limited adaptive histogram equalization over one
// channel: remainder-absorbing tiles, real-valued clipping at
// clip * tile_pixels / 256, uniform redistribution, mapping round(255*CDF),
// bilinear blend of the four nearest tile-center mappings.
inline std::vector<std::uint8_t> clahe_ref_channel(const fundus::ImageBuffer& img, int c,
                                                   int tiles_x, int tiles_y, double clip) {
    const int w = img.width(), h = img.height();
    const int base_w = w / tiles_x, base_h = h / tiles_y;

    auto tile_x0 = [&](int tx) { return tx * base_w; };
    auto tile_y0 = [&](int ty) { return ty * base_h; };
    auto tile_w = [&](int tx) { return tx == tiles_x - 1 ? w - tile_x0(tx) : base_w; };
    auto tile_h = [&](int ty) { return ty == tiles_y - 1 ? h - tile_y0(ty) : base_h; };

    // Per-tile lookup tables.
    std::vector<std::vector<int>> luts(static_cast<std::size_t>(tiles_x) * tiles_y);
    for (int ty = 0; ty < tiles_y; ++ty)
        for (int tx = 0; tx < tiles_x; ++tx) {
            const int x0 = tile_x0(tx), y0 = tile_y0(ty), tw = tile_w(tx), th = tile_h(ty);
            const double pixels = static_cast<double>(tw) * th;
            std::vector<double> hist(256, 0.0);
            for (int y = y0; y < y0 + th; ++y)
                for (int x = x0; x < x0 + tw; ++x) hist[img.at_u8(x, y, c)] += 1.0;
            const double threshold = clip * pixels / 256.0;
            double excess = 0.0;
            for (int v = 0; v < 256; ++v)
                if (hist[v] > threshold) {
                    excess += hist[v] - threshold;
                    hist[v] = threshold;
                }
            const double add = excess / 256.0;
            std::vector<int> lut(256);
            double cum = 0.0;
            for (int v = 0; v < 256; ++v) {
                cum += hist[v] + add;
                lut[v] = static_cast<int>(std::lround(255.0 * (cum / pixels)));
            }
            luts[static_cast<std::size_t>(ty) * tiles_x + tx] = std::move(lut);
        }

    auto center_x = [&](int tx) { return tile_x0(tx) + (tile_w(tx) - 1) / 2.0; };
    auto center_y = [&](int ty) { return tile_y0(ty) + (tile_h(ty) - 1) / 2.0; };

    std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int tx0, tx1, ty0, ty1;
            double wx, wy;
            if (tiles_x == 1 || x <= center_x(0)) {
                tx0 = tx1 = 0;
                wx = 0.0;
            } else if (x >= center_x(tiles_x - 1)) {
                tx0 = tx1 = tiles_x - 1;
                wx = 0.0;
            } else {
                tx0 = 0;
                while (tx0 + 1 < tiles_x && center_x(tx0 + 1) <= x) ++tx0;
                tx1 = tx0 + 1;
                wx = (x - center_x(tx0)) / (center_x(tx1) - center_x(tx0));
            }
            if (tiles_y == 1 || y <= center_y(0)) {
                ty0 = ty1 = 0;
                wy = 0.0;
            } else if (y >= center_y(tiles_y - 1)) {
                ty0 = ty1 = tiles_y - 1;
                wy = 0.0;
            } else {
                ty0 = 0;
                while (ty0 + 1 < tiles_y && center_y(ty0 + 1) <= y) ++ty0;
                ty1 = ty0 + 1;
                wy = (y - center_y(ty0)) / (center_y(ty1) - center_y(ty0));
            }
            const int v = img.at_u8(x, y, c);
            const double m00 = luts[static_cast<std::size_t>(ty0) * tiles_x + tx0][v];
            const double m10 = luts[static_cast<std::size_t>(ty0) * tiles_x + tx1][v];
            const double m01 = luts[static_cast<std::size_t>(ty1) * tiles_x + tx0][v];
            const double m11 = luts[static_cast<std::size_t>(ty1) * tiles_x + tx1][v];
            const double m =
                (1.0 - wy) * ((1.0 - wx) * m00 + wx * m10) + wy * ((1.0 - wx) * m01 + wx * m11);
            out[static_cast<std::size_t>(y) * w + x] = clamp_round_u8(m);
        }
    return out;
}

inline fundus::ImageBuffer clahe_ref(const fundus::ImageBuffer& img, int tiles_x, int tiles_y,
                                     double clip) {
    auto out = img;
    for (int c = 0; c < img.channels(); ++c) {
        const auto channel = clahe_ref_channel(img, c, tiles_x, tiles_y, clip);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                out.set_u8(x, y, c, channel[static_cast<std::size_t>(y) * img.width() + x]);
    }
    return out;
}

// Plain global histogram equalization of one channel.
inline std::vector<std::uint8_t> global_hist_eq(const fundus::ImageBuffer& img, int c) {
    std::vector<std::size_t> hist(256, 0);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) ++hist[img.at_u8(x, y, c)];
    const double total = static_cast<double>(img.width()) * img.height();
    std::vector<int> lut(256);
    std::size_t cum = 0;
    for (int v = 0; v < 256; ++v) {
        cum += hist[v];
        lut[v] = static_cast<int>(std::lround(255.0 * (cum / total)));
    }
    std::vector<std::uint8_t> out(static_cast<std::size_t>(img.width()) * img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out[static_cast<std::size_t>(y) * img.width() + x] =
                static_cast<std::uint8_t>(lut[img.at_u8(x, y, c)]);
    return out;
}

// ------------------------------------------------------------ metrics

inline int argmax_ref(const std::vector<double>& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

inline std::vector<std::vector<std::size_t>> confusion_ref(
    const std::vector<fundus::metrics::PredictionRecord>& records, bool dme, int k) {
    std::vector<std::vector<std::size_t>> cm(k, std::vector<std::size_t>(k, 0));
    for (const auto& r : records) {
        const int t = dme ? *r.true_dme : r.true_dr;
        const int p = argmax_ref(dme ? r.prob_dme : r.prob_dr);
        ++cm[t][p];
    }
    return cm;
}

inline double accuracy_ref(const std::vector<std::vector<std::size_t>>& cm) {
    std::size_t trace = 0, total = 0;
    for (std::size_t t = 0; t < cm.size(); ++t)
        for (std::size_t p = 0; p < cm.size(); ++p) {
            total += cm[t][p];
            if (t == p) trace += cm[t][p];
        }
    return static_cast<double>(trace) / static_cast<double>(total);
}

struct PrfRef {
    std::vector<double> pre, rec, f1;
};

inline PrfRef prf_ref(const std::vector<std::vector<std::size_t>>& cm) {
    const int k = static_cast<int>(cm.size());
    PrfRef out;
    for (int c = 0; c < k; ++c) {
        std::size_t tp = cm[c][c], fp = 0, fn = 0;
        for (int o = 0; o < k; ++o) {
            if (o == c) continue;
            fp += cm[o][c];
            fn += cm[c][o];
        }
        out.pre.push_back(tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp));
        out.rec.push_back(tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn));
        out.f1.push_back(2 * tp + fn + fp == 0 ? 0.0
                                               : 2.0 * tp / static_cast<double>(2 * tp + fn + fp));
    }
    return out;
}

// Exhaustive pairwise AUC: P(score_pos > score_neg) + 0.5 P(tie).
inline double auc_pairwise_ref(const std::vector<double>& scores,
                               const std::vector<bool>& positive) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!positive[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (positive[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

inline double joint_accuracy_ref(const std::vector<fundus::metrics::PredictionRecord>& records) {
    std::size_t hits = 0;
    for (const auto& r : records)
        if (argmax_ref(r.prob_dr) == r.true_dr && argmax_ref(r.prob_dme) == *r.true_dme) ++hits;
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

// ------------------------------------------------------------ resize

inline double bilinear_ref_at(const fundus::ImageBuffer& img, int c, double fx, double fy) {
    fx = std::clamp(fx, 0.0, static_cast<double>(img.width() - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height() - 1));
    const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
    const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
    const double wx = fx - x0, wy = fy - y0;
    auto v = [&](int x, int y) {
        return img.depth() == fundus::SampleDepth::U8 ? static_cast<double>(img.at_u8(x, y, c))
                                                      : img.at_f32(x, y, c);
    };
    return (1 - wy) * ((1 - wx) * v(x0, y0) + wx * v(x1, y0)) +
           wy * ((1 - wx) * v(x0, y1) + wx * v(x1, y1));
}

} // namespace oracle
