#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "panomesh/types.hpp"

namespace panomesh {

/// Interleaved 8-bit RGB image.
struct ImageU8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // 3 * width * height

    ImageU8() = default;
    ImageU8(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t* px(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* px(int x, int y) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    bool same_size(const ImageU8& o) const { return width == o.width && height == o.height; }
};

/// Single-channel float image (grayscale workspace).
struct ImageF {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    ImageF() = default;
    ImageF(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.f) {}

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    const float* row(int y) const { return data.data() + static_cast<std::size_t>(y) * width; }
    float* row(int y) { return data.data() + static_cast<std::size_t>(y) * width; }
};

/// ITU-R BT.601 luma.
ImageF to_grayscale(const ImageU8& img);

/// Bilinear sample of a grayscale image at a real-valued position (pixel
/// positions are the integer lattice). Out-of-range positions clamp.
float sample_bilinear(const ImageF& img, double x, double y);

void sample_bilinear_rgb(const ImageU8& img, double x, double y, double out[3]);

ImageU8 read_image(const std::string& path);   // PNG or binary PPM by extension
void write_image(const std::string& path, const ImageU8& img);

ImageU8 read_png(const std::string& path);
void write_png(const std::string& path, const ImageU8& img);
ImageU8 read_ppm(const std::string& path);
void write_ppm(const std::string& path, const ImageU8& img);

}  // namespace panomesh
