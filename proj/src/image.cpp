#include "fundus/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fundus {

namespace {

void check_dims(int w, int h, int c) {
    if (w < 1 || h < 1)
        throw ContractError("image dimensions must be >= 1, got " + std::to_string(w) + "x" +
                            std::to_string(h));
    if (c != 1 && c != 3)
        throw ContractError("channel count must be 1 or 3, got " + std::to_string(c));
}

// Half-away-from-zero, applied exactly once at the end of float-internal ops.
std::uint8_t round_to_u8(double v) {
    long r = std::lround(v);
    return static_cast<std::uint8_t>(std::clamp(r, 0L, 255L));
}

} // namespace

ImageBuffer::ImageBuffer(int w, int h, int c, SampleDepth d)
    : width_(w), height_(h), channels_(c), depth_(d) {
    check_dims(w, h, c);
    if (d == SampleDepth::U8)
        u8_.assign(sample_count(), 0);
    else
        f32_.assign(sample_count(), 0.0f);
}

ImageBuffer ImageBuffer::u8(int width, int height, int channels) {
    return ImageBuffer(width, height, channels, SampleDepth::U8);
}

ImageBuffer ImageBuffer::f32(int width, int height, int channels) {
    return ImageBuffer(width, height, channels, SampleDepth::F32);
}

std::span<const std::uint8_t> ImageBuffer::u8_samples() const {
    if (depth_ != SampleDepth::U8) throw ContractError("buffer is not U8");
    return u8_;
}

std::span<std::uint8_t> ImageBuffer::u8_samples() {
    if (depth_ != SampleDepth::U8) throw ContractError("buffer is not U8");
    return u8_;
}

std::span<const float> ImageBuffer::f32_samples() const {
    if (depth_ != SampleDepth::F32) throw ContractError("buffer is not F32");
    return f32_;
}

std::span<float> ImageBuffer::f32_samples() {
    if (depth_ != SampleDepth::F32) throw ContractError("buffer is not F32");
    return f32_;
}

ImageBuffer extract_green(const ImageBuffer& img) {
    if (img.channels() != 3) throw ContractError("extract_green requires a 3-channel image");
    ImageBuffer out = img.depth() == SampleDepth::U8 ? ImageBuffer::u8(img.width(), img.height(), 1)
                                                     : ImageBuffer::f32(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            if (img.depth() == SampleDepth::U8)
                out.set_u8(x, y, 0, img.at_u8(x, y, 1));
            else
                out.set_f32(x, y, 0, img.at_f32(x, y, 1));
        }
    return out;
}

ImageBuffer replicate_to_rgb(const ImageBuffer& img) {
    if (img.channels() != 1) throw ContractError("replicate_to_rgb requires a 1-channel image");
    ImageBuffer out = img.depth() == SampleDepth::U8 ? ImageBuffer::u8(img.width(), img.height(), 3)
                                                     : ImageBuffer::f32(img.width(), img.height(), 3);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c) {
                if (img.depth() == SampleDepth::U8)
                    out.set_u8(x, y, c, img.at_u8(x, y, 0));
                else
                    out.set_f32(x, y, c, img.at_f32(x, y, 0));
            }
    return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1)
        throw ContractError("resize target must be >= 1x1");

    const bool is_u8 = img.depth() == SampleDepth::U8;
    ImageBuffer out = is_u8 ? ImageBuffer::u8(out_w, out_h, img.channels())
                            : ImageBuffer::f32(out_w, out_h, img.channels());

    // Half-pixel centers (align-corners false).
    const double sx = static_cast<double>(img.width()) / out_w;
    const double sy = static_cast<double>(img.height()) / out_h;

    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height() - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width() - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width() - 1);
            const double wx = fx - x0;
            for (int c = 0; c < img.channels(); ++c) {
                const double v00 = is_u8 ? img.at_u8(x0, y0, c) : img.at_f32(x0, y0, c);
                const double v10 = is_u8 ? img.at_u8(x1, y0, c) : img.at_f32(x1, y0, c);
                const double v01 = is_u8 ? img.at_u8(x0, y1, c) : img.at_f32(x0, y1, c);
                const double v11 = is_u8 ? img.at_u8(x1, y1, c) : img.at_f32(x1, y1, c);
                const double v = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v10) +
                                 wy * ((1.0 - wx) * v01 + wx * v11);
                if (is_u8)
                    out.set_u8(x, y, c, round_to_u8(v));
                else
                    out.set_f32(x, y, c, static_cast<float>(v));
            }
        }
    }
    return out;
}

namespace {

template <typename T>
ImageBuffer flip_impl(const ImageBuffer& img, bool horizontal) {
    ImageBuffer out = img;
    const int w = img.width(), h = img.height(), ch = img.channels();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int sx = horizontal ? w - 1 - x : x;
            const int sy = horizontal ? y : h - 1 - y;
            for (int c = 0; c < ch; ++c) {
                if constexpr (std::is_same_v<T, std::uint8_t>)
                    out.set_u8(x, y, c, img.at_u8(sx, sy, c));
                else
                    out.set_f32(x, y, c, img.at_f32(sx, sy, c));
            }
        }
    return out;
}

} // namespace

ImageBuffer flip_horizontal(const ImageBuffer& img) {
    return img.depth() == SampleDepth::U8 ? flip_impl<std::uint8_t>(img, true)
                                          : flip_impl<float>(img, true);
}

ImageBuffer flip_vertical(const ImageBuffer& img) {
    return img.depth() == SampleDepth::U8 ? flip_impl<std::uint8_t>(img, false)
                                          : flip_impl<float>(img, false);
}

ImageBuffer normalize(const ImageBuffer& img, const NormalizationParams& p) {
    const int ch = img.channels();
    if (static_cast<int>(p.mean.size()) != ch || static_cast<int>(p.std.size()) != ch)
        throw ContractError("normalization params must have one mean/std entry per channel (" +
                            std::to_string(ch) + " channels)");
    for (double s : p.std)
        if (!(s > 0.0)) throw ContractError("normalization std entries must be > 0");

    ImageBuffer out = ImageBuffer::f32(img.width(), img.height(), ch);
    const bool is_u8 = img.depth() == SampleDepth::U8;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < ch; ++c) {
                const double unit = is_u8 ? img.at_u8(x, y, c) / 255.0 : img.at_f32(x, y, c);
                out.set_f32(x, y, c, static_cast<float>((unit - p.mean[c]) / p.std[c]));
            }
    return out;
}

} // namespace fundus
