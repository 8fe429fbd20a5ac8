#pragma once

#include <string>

#include "fundus/image.hpp"

namespace fundus {

/// Decodes PNG, JPEG or BMP (detected by magic bytes, not extension).
/// Color sources yield 3 channels, grayscale sources 1; alpha is dropped,
/// 16-bit PNGs are reduced to 8.
ImageBuffer load_image(const std::string& path);

/// Writes a lossless PNG. U8 buffers only; quantize F32 data first.
void save_image(const ImageBuffer& img, const std::string& path);

} // namespace fundus
