#pragma once

#include <cmath>
#include <random>

#include "radiolith/raster.hpp"

namespace test_helpers {

// Fixtures are quantized to the 1/256 grid: dyadic values keep complement
// and windowed-sum arithmetic exact in binary floating point, matching the
// 8-bit provenance of real inputs.
inline radiolith::RasterImage random_image(int w, int h, std::uint64_t seed) {
    radiolith::RasterImage img(w, h, 1);
    std::mt19937_64 rng(seed);
    for (double& v : img.pixels) {
        double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v = std::floor(u * 257.0) / 256.0;
        if (v > 1.0) v = 1.0;
    }
    return img;
}

inline radiolith::RasterImage constant_image(int w, int h, double value) {
    return radiolith::RasterImage(w, h, 1, value);
}

/// Values on the n/255 grid, i.e. exactly what an 8-bit file can hold.
inline radiolith::RasterImage random_image_8bit(int w, int h, std::uint64_t seed) {
    radiolith::RasterImage img(w, h, 1);
    std::mt19937_64 rng(seed);
    for (double& v : img.pixels) v = static_cast<double>(rng() % 256) / 255.0;
    return img;
}

/// Sum of squared 4-neighbor Laplacians over the interior; a plain
/// high-frequency energy meter.
inline double laplacian_energy(const radiolith::RasterImage& img) {
    double e = 0.0;
    for (int y = 1; y + 1 < img.height; ++y)
        for (int x = 1; x + 1 < img.width; ++x) {
            double l = 4.0 * img.at(x, y) - img.at(x - 1, y) - img.at(x + 1, y) -
                       img.at(x, y - 1) - img.at(x, y + 1);
            e += l * l;
        }
    return e;
}

/// Vertical step: left half `lo`, right half `hi` from column `edge_x`.
inline radiolith::RasterImage step_image(int w, int h, int edge_x, double lo, double hi) {
    radiolith::RasterImage img(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(x, y) = x < edge_x ? lo : hi;
    return img;
}

/// Gaussian spot of amplitude `amp` (negative = dark blob) on `bg`.
inline radiolith::RasterImage gaussian_blob_image(int w, int h, double cx, double cy,
                                                  double sigma, double bg, double amp) {
    radiolith::RasterImage img(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            img.at(x, y) = bg + amp * std::exp(-d2 / (2.0 * sigma * sigma));
        }
    return img;
}

inline double max_abs_diff(const radiolith::RasterImage& a, const radiolith::RasterImage& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        m = std::max(m, std::fabs(a.pixels[i] - b.pixels[i]));
    return m;
}

}  // namespace test_helpers
