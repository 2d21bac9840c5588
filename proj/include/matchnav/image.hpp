#ifndef MATCHNAV_IMAGE_HPP
#define MATCHNAV_IMAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "matchnav/common.hpp"

namespace matchnav {

/// Grayscale raster, row-major, intensities in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int w, int h, float fill = 0.0f)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }

    bool valid() const {
        if (width <= 0 || height <= 0) return false;
        if (pixels.size() != static_cast<size_t>(width) * height) return false;
        for (float v : pixels)
            if (!(v >= 0.0f && v <= 1.0f)) return false;
        return true;
    }

    /// Bilinear sample with clamp-to-edge, coordinates in pixel units.
    float sample(double x, double y) const {
        if (x < 0) x = 0;
        if (y < 0) y = 0;
        if (x > width - 1) x = width - 1;
        if (y > height - 1) y = height - 1;
        const int x0 = static_cast<int>(x);
        const int y0 = static_cast<int>(y);
        const int x1 = x0 + 1 < width ? x0 + 1 : x0;
        const int y1 = y0 + 1 < height ? y0 + 1 : y0;
        const double fx = x - x0;
        const double fy = y - y0;
        const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
        const double bot = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
        return static_cast<float>(top * (1.0 - fy) + bot * fy);
    }

    uint64_t content_hash() const {
        uint64_t h = fnv1a64(&width, sizeof(width));
        h = fnv1a64(&height, sizeof(height), h);
        if (!pixels.empty()) h = fnv1a64(pixels.data(), pixels.size() * sizeof(float), h);
        return h;
    }
};

/// 8-bit grayscale PGM (P5 binary written; P5 and P2 read).
void write_pgm(const Image& img, const std::string& path);
Image read_pgm(const std::string& path);

} // namespace matchnav

#endif
