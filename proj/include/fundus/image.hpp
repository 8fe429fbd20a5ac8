#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fundus/error.hpp"

namespace fundus {

enum class SampleDepth { U8, F32 };

/// Rectangular raster, 1 or 3 channels, row-major and channel-interleaved.
/// U8 samples live in [0,255]; F32 samples are nominally [0,1] but ops such
/// as normalize may legitimately leave that range. Buffers are plain values:
/// copy freely, no interior mutation surprises.
class ImageBuffer {
public:
    ImageBuffer() = default;

    static ImageBuffer u8(int width, int height, int channels);
    static ImageBuffer f32(int width, int height, int channels);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    SampleDepth depth() const { return depth_; }
    std::size_t sample_count() const {
        return static_cast<std::size_t>(width_) * height_ * channels_;
    }

    std::span<const std::uint8_t> u8_samples() const;
    std::span<std::uint8_t> u8_samples();
    std::span<const float> f32_samples() const;
    std::span<float> f32_samples();

    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }
    std::uint8_t at_u8(int x, int y, int c = 0) const { return u8_samples()[index(x, y, c)]; }
    float at_f32(int x, int y, int c = 0) const { return f32_samples()[index(x, y, c)]; }
    void set_u8(int x, int y, int c, std::uint8_t v) { u8_samples()[index(x, y, c)] = v; }
    void set_f32(int x, int y, int c, float v) { f32_samples()[index(x, y, c)] = v; }

    bool operator==(const ImageBuffer&) const = default;

private:
    ImageBuffer(int w, int h, int c, SampleDepth d);

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    SampleDepth depth_ = SampleDepth::U8;
    std::vector<std::uint8_t> u8_;
    std::vector<float> f32_;
};

/// Per-channel affine normalization constants; std entries strictly positive.
struct NormalizationParams {
    std::vector<double> mean;
    std::vector<double> std;

    // Standard statistics for pretrained RGB classifier consumers.
    static NormalizationParams imagenet_rgb() {
        return {{0.485, 0.456, 0.406}, {0.229, 0.224, 0.225}};
    }
};

ImageBuffer extract_green(const ImageBuffer& img);
ImageBuffer replicate_to_rgb(const ImageBuffer& img);
ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h);
ImageBuffer flip_horizontal(const ImageBuffer& img);
ImageBuffer flip_vertical(const ImageBuffer& img);

/// (in/255 - mean_c) / std_c per channel; always yields an F32 buffer.
/// F32 inputs are taken as-is (no second /255).
ImageBuffer normalize(const ImageBuffer& img, const NormalizationParams& p);

} // namespace fundus
