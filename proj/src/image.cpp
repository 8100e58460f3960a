#include "panomesh/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

namespace panomesh {

ImageF to_grayscale(const ImageU8& img) {
    ImageF out(img.width, img.height);
    const std::uint8_t* p = img.data.data();
    for (std::size_t i = 0; i < out.data.size(); ++i, p += 3) {
        out.data[i] = 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
    }
    return out;
}

float sample_bilinear(const ImageF& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = img.at(x0, y0) * (1 - fx) + img.at(x1, y0) * fx;
    const double bot = img.at(x0, y1) * (1 - fx) + img.at(x1, y1) * fx;
    return static_cast<float>(top * (1 - fy) + bot * fy);
}

void sample_bilinear_rgb(const ImageU8& img, double x, double y, double out[3]) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const std::uint8_t* p00 = img.px(x0, y0);
    const std::uint8_t* p10 = img.px(x1, y0);
    const std::uint8_t* p01 = img.px(x0, y1);
    const std::uint8_t* p11 = img.px(x1, y1);
    for (int c = 0; c < 3; ++c) {
        const double top = p00[c] * (1 - fx) + p10[c] * fx;
        const double bot = p01[c] * (1 - fx) + p11[c] * fx;
        out[c] = top * (1 - fy) + bot * fy;
    }
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_suffix(const std::string& s, const char* suf) {
    const std::size_t n = std::strlen(suf);
    return s.size() >= n && s.compare(s.size() - n, n, suf) == 0;
}

}  // namespace

ImageU8 read_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw DataError("cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("PNG decode failed: " + path);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_read_update_info(png, info);

    ImageU8 img(static_cast<int>(png_get_image_width(png, info)),
                static_cast<int>(png_get_image_height(png, info)));
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = img.px(0, y);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, const ImageU8& img) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw DataError("cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("PNG encode failed: " + path);
    }
    png_init_io(png, f.get());
    png_set_compression_level(png, 1);  // fast; determinism only needs a fixed level
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = const_cast<png_bytep>(img.px(0, y));
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageU8 read_ppm(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw DataError("cannot open " + path);
    char magic[3] = {0};
    int w = 0, h = 0, maxv = 0;
    if (std::fscanf(f.get(), "%2s %d %d %d", magic, &w, &h, &maxv) != 4 ||
        std::strcmp(magic, "P6") != 0 || maxv != 255 || w <= 0 || h <= 0) {
        throw DataError("not a binary 8-bit PPM: " + path);
    }
    std::fgetc(f.get());  // single whitespace after header
    ImageU8 img(w, h);
    if (std::fread(img.data.data(), 1, img.data.size(), f.get()) != img.data.size()) {
        throw DataError("truncated PPM: " + path);
    }
    return img;
}

void write_ppm(const std::string& path, const ImageU8& img) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw DataError("cannot write " + path);
    std::fprintf(f.get(), "P6\n%d %d\n255\n", img.width, img.height);
    if (std::fwrite(img.data.data(), 1, img.data.size(), f.get()) != img.data.size()) {
        throw DataError("short write: " + path);
    }
}

ImageU8 read_image(const std::string& path) {
    if (has_suffix(path, ".ppm")) return read_ppm(path);
    return read_png(path);
}

void write_image(const std::string& path, const ImageU8& img) {
    if (has_suffix(path, ".ppm")) return write_ppm(path, img);
    write_png(path, img);
}

}  // namespace panomesh
