#pragma once

#include <optional>
#include <vector>

#include "fundus/image.hpp"

namespace fundus {

/// Weighted difference-of-Gaussian enhancement:
///   out = clamp(alpha * I + beta * blur_sigma(I) + bias).
/// sigma empty means AUTO: max(width, height) / 30.
struct BenParams {
    std::optional<double> sigma; // nullopt = AUTO
    double alpha = 4.0;
    double beta = -4.0;
    double bias = 128.0;
};

struct ClaheParams {
    int tiles_x = 8;
    int tiles_y = 8;
    double clip_limit = 2.0; // multiple of the uniform bin height (tile_pixels / 256)
};

/// Separable Gaussian convolution, kernel radius ceil(3*sigma), L1-normalized
/// taps, reflect-101 borders. Accumulates in double; U8 buffers are rounded
/// half-away-from-zero once at the end.
ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma);

ImageBuffer ben_enhance(const ImageBuffer& img, const BenParams& p = {});

/// Contrast-limited adaptive histogram equalization. U8 only; 3-channel
/// input is processed per channel independently. Tiles partition the image
/// with the last tile in each axis absorbing remainder pixels; histogram
/// bins are clipped at clip_limit * tile_pixels / 256 with the excess
/// redistributed uniformly, the per-tile mapping is round(255 * CDF), and
/// each pixel bilinearly interpolates the four nearest tile-center mappings
/// (clamped replication at borders).
ImageBuffer clahe(const ImageBuffer& img, const ClaheParams& p = {});

/// Per-tile lookup tables as used by clahe, indexed [ty][tx][value].
/// Exposed for verification; every table is monotone non-decreasing.
std::vector<std::vector<std::vector<int>>> clahe_tile_mappings(const ImageBuffer& plane,
                                                               const ClaheParams& p);

/// Green-channel extraction followed by ben_enhance; optionally replicated
/// back to 3 channels for consumers that expect RGB.
ImageBuffer green_ben(const ImageBuffer& img, const BenParams& p = {}, bool replicate = false);

/// Green-channel extraction followed by clahe.
ImageBuffer green_clahe(const ImageBuffer& img, const ClaheParams& p = {}, bool replicate = false);

} // namespace fundus
