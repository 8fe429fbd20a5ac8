#pragma once

#include <string>
#include <vector>

#include "fundus/image.hpp"

namespace fundus {

/// Side-by-side comparison strip: the original image plus one tile per
/// requested method, in order, separated by 4-pixel black columns, each tile
/// captioned by a label strip rendered with a built-in 5x7 glyph set (no
/// font dependencies). Tile pixel content below the strip is byte-identical
/// to the standalone enhancement output (1-channel results shown replicated
/// to RGB).
struct MontageLayout {
    static constexpr int separator = 4;
    static constexpr int label_height = 20;
};

/// Valid method names: green, ben, clahe, greenben, greenclahe (defaults).
ImageBuffer make_montage(const ImageBuffer& original, const std::vector<std::string>& methods);

/// The enhancement a montage tile shows, as a 3-channel buffer.
ImageBuffer montage_tile(const ImageBuffer& original, const std::string& method);

} // namespace fundus
