#include "fundus/codec.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include <jpeglib.h>
#include <png.h>

namespace fundus {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open file", path);
    return f;
}

// ---------------------------------------------------------------- PNG

ImageBuffer load_png(std::FILE* fp, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("png reader init failed", path);
    }
    std::vector<std::uint8_t> data;
    int width = 0, height = 0, channels = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("corrupt PNG", path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_packing(png);
    const png_byte color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    channels = static_cast<int>(png_get_channels(png, info));
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("unsupported PNG channel layout", path);
    }
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    data.resize(stride * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = data.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageBuffer out = ImageBuffer::u8(width, height, channels);
    std::memcpy(out.u8_samples().data(), data.data(), data.size());
    return out;
}

// ---------------------------------------------------------------- JPEG

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

ImageBuffer load_jpeg(std::FILE* fp, const std::string& path) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;

    std::vector<std::uint8_t> data;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError("corrupt JPEG", path);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.jpeg_color_space == JCS_GRAYSCALE ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const int width = static_cast<int>(cinfo.output_width);
    const int height = static_cast<int>(cinfo.output_height);
    const int channels = cinfo.output_components;
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    data.resize(stride * height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = data.data() + cinfo.output_scanline * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    // libjpeg downgrades some stream corruption (e.g. truncation) to warnings.
    const long warnings = jerr.pub.num_warnings;
    jpeg_destroy_decompress(&cinfo);
    if (warnings > 0) throw DecodeError("corrupt JPEG", path);

    ImageBuffer out = ImageBuffer::u8(width, height, channels);
    std::memcpy(out.u8_samples().data(), data.data(), data.size());
    return out;
}

// ---------------------------------------------------------------- BMP

std::uint32_t rd_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t rd_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

// Uncompressed 8/24/32-bit BITMAPINFOHEADER files.
ImageBuffer load_bmp(std::FILE* fp, const std::string& path) {
    std::fseek(fp, 0, SEEK_END);
    const long size = std::ftell(fp);
    std::fseek(fp, 0, SEEK_SET);
    if (size < 54) throw DecodeError("truncated BMP", path);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
    if (std::fread(buf.data(), 1, buf.size(), fp) != buf.size())
        throw DecodeError("truncated BMP", path);

    const std::uint32_t data_offset = rd_u32(buf.data() + 10);
    const std::uint32_t header_size = rd_u32(buf.data() + 14);
    if (header_size < 40) throw DecodeError("unsupported BMP header", path);
    const std::int32_t w = static_cast<std::int32_t>(rd_u32(buf.data() + 18));
    const std::int32_t h_raw = static_cast<std::int32_t>(rd_u32(buf.data() + 22));
    const std::uint16_t bpp = rd_u16(buf.data() + 28);
    const std::uint32_t compression = rd_u32(buf.data() + 30);
    if (compression != 0) throw DecodeError("compressed BMP not supported", path);
    if (bpp != 8 && bpp != 24 && bpp != 32) throw DecodeError("unsupported BMP bit depth", path);
    if (w < 1 || h_raw == 0) throw DecodeError("bad BMP dimensions", path);
    const bool bottom_up = h_raw > 0;
    const int h = bottom_up ? h_raw : -h_raw;

    // 8-bit files carry a palette right after the info header.
    std::vector<std::uint8_t> palette; // BGRA quads
    bool gray_palette = true;
    if (bpp == 8) {
        std::uint32_t colors = rd_u32(buf.data() + 46);
        if (colors == 0) colors = 256;
        const std::size_t pal_off = 14 + header_size;
        if (pal_off + colors * 4 > buf.size()) throw DecodeError("truncated BMP palette", path);
        palette.assign(buf.begin() + pal_off, buf.begin() + pal_off + colors * 4);
        for (std::uint32_t i = 0; i < colors; ++i)
            if (palette[i * 4] != palette[i * 4 + 1] || palette[i * 4 + 1] != palette[i * 4 + 2])
                gray_palette = false;
    }

    const int channels = (bpp == 8 && gray_palette) ? 1 : 3;
    const std::size_t row_bytes = (static_cast<std::size_t>(w) * bpp / 8 + 3) & ~std::size_t{3};
    if (data_offset + row_bytes * h > buf.size()) throw DecodeError("truncated BMP", path);

    ImageBuffer out = ImageBuffer::u8(w, h, channels);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = buf.data() + data_offset + row_bytes * (bottom_up ? h - 1 - y : y);
        for (int x = 0; x < w; ++x) {
            if (bpp == 8) {
                const std::uint8_t idx = row[x];
                if (idx * 4 + 3 >= static_cast<int>(palette.size()))
                    throw DecodeError("BMP palette index out of range", path);
                if (channels == 1) {
                    out.set_u8(x, y, 0, palette[idx * 4]);
                } else {
                    out.set_u8(x, y, 0, palette[idx * 4 + 2]);
                    out.set_u8(x, y, 1, palette[idx * 4 + 1]);
                    out.set_u8(x, y, 2, palette[idx * 4 + 0]);
                }
            } else {
                const std::uint8_t* px = row + x * (bpp / 8);
                out.set_u8(x, y, 0, px[2]); // BGR(A) on disk
                out.set_u8(x, y, 1, px[1]);
                out.set_u8(x, y, 2, px[0]);
            }
        }
    }
    return out;
}

} // namespace

ImageBuffer load_image(const std::string& path) {
    FilePtr fp = open_file(path, "rb");
    std::uint8_t magic[8] = {};
    const std::size_t got = std::fread(magic, 1, sizeof(magic), fp.get());
    std::fseek(fp.get(), 0, SEEK_SET);
    if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) return load_png(fp.get(), path);
    if (got >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF)
        return load_jpeg(fp.get(), path);
    if (got >= 2 && magic[0] == 'B' && magic[1] == 'M') return load_bmp(fp.get(), path);
    throw DecodeError("unsupported image format", path);
}

void save_image(const ImageBuffer& img, const std::string& path) {
    if (img.depth() != SampleDepth::U8)
        throw ContractError("save_image requires a U8 buffer; quantize F32 data first");

    FilePtr fp = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png writer init failed", path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed", path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width(), img.height(), 8,
                 img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(img.width()) * img.channels();
    auto samples = img.u8_samples();
    for (int y = 0; y < img.height(); ++y)
        png_write_row(png, const_cast<png_bytep>(samples.data() + y * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace fundus
