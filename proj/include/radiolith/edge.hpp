#pragma once

#include <array>
#include <cstdint>

#include "radiolith/kernel.hpp"
#include "radiolith/raster.hpp"

namespace radiolith {

enum class GradientOperator { sobel, prewitt, scharr, roberts };
enum class HybridKind { scharr_prewitt, scharr_sobel };

/// Per-pixel derivative pair with magnitude sqrt(gx^2 + gy^2) and the
/// full-quadrant direction atan2(gy, gx) in (-pi, pi]. x derivatives grow
/// rightward, y derivatives grow downward.
struct GradientField {
    RasterImage gx, gy, magnitude, direction;
    GradientOperator op = GradientOperator::sobel;

    /// Angle measured from the vertical axis, atan(gx/gy), a convention some
    /// references use; Roberts carries its customary -3pi/4 offset. Reported
    /// for comparison only; non-maximum suppression uses the atan2 field.
    double direction_from_vertical(int x, int y) const;
};

struct EdgeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> mask;
    double low = 0.0;
    double high = 0.0;

    bool at(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x] != 0; }
    RasterImage to_image() const;  // 0 or 1 intensities
    std::size_t edge_count() const;
};

GradientField gradient(const RasterImage& img, GradientOperator op);

std::array<GradientField, 3> gradient_channels(const RasterImage& rgb, GradientOperator op);
GradientField gradient_value(const RasterImage& rgb, GradientOperator op);

/// gx from Scharr, gy from the named second operator.
GradientField hybrid_gradient(const RasterImage& img, HybridKind kind);

enum class KernelFamily { gabor, lmak, pvmak };

struct KernelEdgeParams {
    KernelFamily family = KernelFamily::gabor;
    double sigma = 2.0;       // gabor envelope
    double wavelength = 8.0;  // gabor
    double gamma = 2.0;       // lmak Lorentzian half-width
    double f_gauss = 4.0;     // pvmak component FWHMs
    double f_lorentz = 4.0;
    double theta = 0.0;
    double steepness = 1.0;   // arctan modulation slope
    int n_orientations = 1;   // > 1 takes the per-pixel max over a bank
    int radius = 0;           // 0 = derived from the profile width
    BorderPolicy border = BorderPolicy::reflect();
};

/// Absolute response to the named zero-mean kernel; with a bank, the
/// per-pixel maximum across orientations.
RasterImage kernel_edge_response(const RasterImage& img, const KernelEdgeParams& params);

/// Builds the single-orientation kernel the response uses (exposed for tests).
Kernel make_edge_kernel(const KernelEdgeParams& params, double theta);

/// Gaussian blur, Sobel gradient, 4-sector non-maximum suppression, then
/// double-threshold hysteresis (weak pixels survive only when 8-connected
/// to a strong pixel). sigma = 0 skips the blur.
EdgeMap canny(const RasterImage& img, double sigma, double low, double high);

/// Canny with high = Otsu threshold of the gradient-magnitude histogram
/// (scaled by the field maximum) and low = high / 2.
EdgeMap canny_otsu(const RasterImage& img, double sigma);

/// The magnitude plane canny sees after its blur stage (exposed for tests).
RasterImage canny_magnitude(const RasterImage& img, double sigma);

}  // namespace radiolith
