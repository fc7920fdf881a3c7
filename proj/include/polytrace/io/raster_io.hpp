#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "polytrace/error.hpp"
#include "polytrace/raster.hpp"

namespace polytrace {

namespace detail {

// next PGM header token, skipping whitespace and '#' comments
inline std::string pgm_token(std::istream& in) {
    std::string token;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!token.empty()) return token;
            continue;
        }
        token.push_back(static_cast<char>(c));
    }
    return token;
}

inline MaskRaster read_pgm(std::istream& in, const std::string& path) {
    const std::string w = pgm_token(in);
    const std::string h = pgm_token(in);
    const std::string maxval = pgm_token(in);
    if (w.empty() || h.empty() || maxval.empty())
        throw Error("parse-error", "truncated PGM header in " + path);
    long width = 0, height = 0, maxv = 0;
    try {
        width = std::stol(w);
        height = std::stol(h);
        maxv = std::stol(maxval);
    } catch (const std::exception&) {
        throw Error("parse-error", "bad PGM header in " + path);
    }
    if (width <= 0 || height <= 0) throw Error("parse-error", "bad PGM dimensions in " + path);
    if (maxv > 255)
        throw Error("unsupported-raster", path + ": more than 8 bits per pixel");
    if (maxv <= 0) throw Error("parse-error", "bad PGM maxval in " + path);
    MaskRaster mask(static_cast<int>(width), static_cast<int>(height));
    in.read(reinterpret_cast<char*>(mask.labels.data()),
            static_cast<std::streamsize>(mask.labels.size()));
    if (in.gcount() != static_cast<std::streamsize>(mask.labels.size()))
        throw Error("parse-error", "truncated PGM payload in " + path);
    return mask;
}

struct PngReadGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReadGuard() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngWriteGuard() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

inline MaskRaster read_png(const std::string& path) {
    PngReadGuard g;
    g.fp = std::fopen(path.c_str(), "rb");
    if (!g.fp) throw Error("io-error", "cannot read " + path);
    g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    g.info = png_create_info_struct(g.png);
    if (!g.png || !g.info) throw Error("io-error", "libpng initialization failed");
    if (setjmp(png_jmpbuf(g.png))) throw Error("parse-error", "corrupt PNG " + path);
    png_init_io(g.png, g.fp);
    png_read_info(g.png, g.info);

    const png_uint_32 width = png_get_image_width(g.png, g.info);
    const png_uint_32 height = png_get_image_height(g.png, g.info);
    const int bit_depth = png_get_bit_depth(g.png, g.info);
    const int color_type = png_get_color_type(g.png, g.info);
    if (color_type != PNG_COLOR_TYPE_GRAY)
        throw Error("unsupported-raster", path + ": PNG is not single-channel grayscale");
    if (bit_depth > 8)
        throw Error("unsupported-raster", path + ": more than 8 bits per pixel");
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(g.png);
    png_read_update_info(g.png, g.info);

    MaskRaster mask(static_cast<int>(width), static_cast<int>(height));
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = mask.labels.data() + static_cast<std::size_t>(y) * width;
    png_read_image(g.png, rows.data());
    png_read_end(g.png, nullptr);
    return mask;
}

inline void write_png(const MaskRaster& mask, const std::string& path) {
    PngWriteGuard g;
    g.fp = std::fopen(path.c_str(), "wb");
    if (!g.fp) throw Error("io-error", "cannot write " + path);
    g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    g.info = png_create_info_struct(g.png);
    if (!g.png || !g.info) throw Error("io-error", "libpng initialization failed");
    if (setjmp(png_jmpbuf(g.png))) throw Error("io-error", "PNG write failed for " + path);
    png_init_io(g.png, g.fp);
    png_set_compression_level(g.png, 6);
    png_set_filter(g.png, 0, PNG_FILTER_NONE);
    png_set_IHDR(g.png, g.info, static_cast<png_uint_32>(mask.width),
                 static_cast<png_uint_32>(mask.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(g.png, g.info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(mask.height));
    for (int y = 0; y < mask.height; ++y)
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(mask.labels.data() + static_cast<std::size_t>(y) * mask.width);
    png_write_image(g.png, rows.data());
    png_write_end(g.png, nullptr);
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

// Reads an 8-bit single-channel mask from a binary PGM (P5) or grayscale
// PNG; pixel values are class ids. Anything else is rejected as
// "unsupported-raster".
inline MaskRaster read_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io-error", "cannot read " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] == 'P' && magic[1] == '5') return detail::read_pgm(in, path);
    if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') {
        in.close();
        return detail::read_png(path);
    }
    if (magic[0] == 'P' && (magic[1] == '2' || magic[1] == '3' || magic[1] == '6'))
        throw Error("unsupported-raster", path + ": only binary single-channel P5 is supported");
    throw Error("unsupported-raster", path + ": unrecognized raster format");
}

// Writes the mask as binary PGM (.pgm) or 8-bit grayscale PNG (.png),
// chosen by the file extension. Output bytes are deterministic.
inline void write_mask(const MaskRaster& mask, const std::string& path) {
    if (detail::ends_with(path, ".pgm")) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("io-error", "cannot write " + path);
        out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
        out.write(reinterpret_cast<const char*>(mask.labels.data()),
                  static_cast<std::streamsize>(mask.labels.size()));
    } else if (detail::ends_with(path, ".png")) {
        detail::write_png(mask, path);
    } else {
        throw Error("unsupported-raster", path + ": use a .pgm or .png extension");
    }
}

}  // namespace polytrace
