#include "fundus/montage.hpp"

#include <array>
#include <cctype>
#include <map>

#include "fundus/enhance.hpp"

namespace fundus {

namespace {

// 5x7 glyphs, one byte per row, bit 4 = leftmost column. Covers the letters
// used by the method labels; anything else renders as a solid block.
const std::uint8_t* glyph_rows(char c) {
    static const std::map<char, std::array<std::uint8_t, 7>> font = {
        {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
        {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
        {'C', {0x0F, 0x10, 0x10, 0x10, 0x10, 0x10, 0x0F}},
        {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
        {'G', {0x0F, 0x10, 0x10, 0x17, 0x11, 0x11, 0x0E}},
        {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
        {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
        {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
        {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
        {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    };
    static const std::array<std::uint8_t, 7> block = {0x1F, 0x1F, 0x1F, 0x1F, 0x1F, 0x1F, 0x1F};
    const auto it = font.find(c);
    return it == font.end() ? block.data() : it->second.data();
}

void draw_label(ImageBuffer& canvas, int x0, int y0, const std::string& text) {
    constexpr int scale = 2;
    int pen_x = x0 + 2;
    const int pen_y = y0 + 3;
    for (char raw : text) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
        if (c == ' ') {
            pen_x += 4 * scale;
            continue;
        }
        const std::uint8_t* rows = glyph_rows(c);
        for (int gy = 0; gy < 7; ++gy)
            for (int gx = 0; gx < 5; ++gx) {
                if (!(rows[gy] & (1 << (4 - gx)))) continue;
                for (int sy = 0; sy < scale; ++sy)
                    for (int sx = 0; sx < scale; ++sx) {
                        const int px = pen_x + gx * scale + sx;
                        const int py = pen_y + gy * scale + sy;
                        if (px < 0 || px >= canvas.width() || py < 0 || py >= canvas.height())
                            continue;
                        for (int ch = 0; ch < 3; ++ch) canvas.set_u8(px, py, ch, 255);
                    }
            }
        pen_x += 6 * scale;
    }
}

ImageBuffer to_rgb(const ImageBuffer& img) {
    return img.channels() == 1 ? replicate_to_rgb(img) : img;
}

} // namespace

ImageBuffer montage_tile(const ImageBuffer& original, const std::string& method) {
    if (method == "green") return to_rgb(extract_green(original));
    if (method == "ben") return to_rgb(ben_enhance(original));
    if (method == "clahe") return to_rgb(clahe(original));
    if (method == "greenben") return to_rgb(green_ben(original));
    if (method == "greenclahe") return to_rgb(green_clahe(original));
    throw ValidationError("unknown enhancement method '" + method +
                          "' (valid: green, ben, clahe, greenben, greenclahe)");
}

ImageBuffer make_montage(const ImageBuffer& original, const std::vector<std::string>& methods) {
    if (methods.empty()) throw ContractError("montage requires at least one method");
    if (original.depth() != SampleDepth::U8)
        throw ContractError("montage requires a U8 image");

    std::vector<ImageBuffer> tiles;
    std::vector<std::string> labels;
    tiles.push_back(to_rgb(original));
    labels.emplace_back("original");
    for (const auto& m : methods) {
        tiles.push_back(montage_tile(original, m));
        labels.push_back(m);
    }

    const int tw = original.width();
    const int th = original.height();
    const int n = static_cast<int>(tiles.size());
    const int out_w = n * tw + (n - 1) * MontageLayout::separator;
    const int out_h = MontageLayout::label_height + th;

    ImageBuffer canvas = ImageBuffer::u8(out_w, out_h, 3); // zero-filled: black
    for (int t = 0; t < n; ++t) {
        const int x0 = t * (tw + MontageLayout::separator);
        draw_label(canvas, x0, 0, labels[t]);
        for (int y = 0; y < th; ++y)
            for (int x = 0; x < tw; ++x)
                for (int c = 0; c < 3; ++c)
                    canvas.set_u8(x0 + x, MontageLayout::label_height + y, c,
                                  tiles[t].at_u8(x, y, c));
    }
    return canvas;
}

} // namespace fundus
