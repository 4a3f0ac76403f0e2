#pragma once

#include <cstdint>

#include "radiolith/kernel.hpp"
#include "radiolith/raster.hpp"

namespace radiolith {

struct BilateralParams {
    double sigma_spatial = 2.0;  // pixels
    double sigma_range = 0.1;    // intensity units
    int radius = 3;
};

struct NoiseSpec {
    double p = 0.05;  // per-pixel corruption probability, half salt half pepper
    std::uint64_t seed = 0;
};

/// Separable Gaussian smoothing, radius ceil(3 sigma), reflect border.
RasterImage gaussian_blur(const RasterImage& img, double sigma);

/// Median of the (2r+1)^2 window selected from a sliding 256-level histogram.
/// Exact for data on the 8-bit grid; reflect border.
RasterImage median_blur(const RasterImage& img, int radius);

/// Window mean via an integral image over the reflect-padded input.
RasterImage mean_blur(const RasterImage& img, int radius);

/// Edge-preserving weighted average with Gaussian range and spatial kernels.
/// The normalizer is the plain weight sum, so constant images are fixed points.
RasterImage bilateral(const RasterImage& img, const BilateralParams& params);

/// Drives each pixel independently from (seed, pixel index) in counter mode;
/// corrupted pixels go to 0 or 1 with equal probability.
RasterImage add_salt_pepper(const RasterImage& img, const NoiseSpec& spec);

}  // namespace radiolith
