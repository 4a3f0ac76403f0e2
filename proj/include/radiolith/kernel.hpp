#pragma once

#include <string>
#include <vector>

#include "radiolith/raster.hpp"

namespace radiolith {

/// Dense odd-sized square kernel. `weight(dx, dy)` addresses by offset from
/// the center, dx along columns and dy along rows.
struct Kernel {
    int size = 1;  // odd
    std::vector<double> weights;
    bool normalized = false;  // sums to 1
    bool zero_mean = false;   // sums to 0

    Kernel() : weights(1, 1.0) {}
    explicit Kernel(int k);

    int radius() const { return size / 2; }
    double& weight(int dx, int dy) {
        return weights[static_cast<std::size_t>(dy + radius()) * size + (dx + radius())];
    }
    double weight(int dx, int dy) const {
        return weights[static_cast<std::size_t>(dy + radius()) * size + (dx + radius())];
    }
    double sum() const;

    /// Debug dump: first line the size, then size rows of decimal weights.
    std::string to_text() const;
};

struct BorderPolicy {
    enum class Mode { reflect, replicate, constant };
    Mode mode = Mode::reflect;
    double value = 0.0;  // for constant

    static BorderPolicy reflect() { return {Mode::reflect, 0.0}; }
    static BorderPolicy replicate() { return {Mode::replicate, 0.0}; }
    static BorderPolicy constant(double v) { return {Mode::constant, v}; }
};

/// Gaussian-vs-Lorentzian mixing state for the pseudo-Voigt profile.
/// f and eta derive from the component FWHMs; gamma is the Lorentzian
/// half-width at half maximum.
struct PseudoVoigtParams {
    double f_gauss = 0.0;    // Gaussian FWHM
    double f_lorentz = 0.0;  // Lorentzian FWHM
    double f = 0.0;          // total FWHM
    double eta = 0.0;        // Lorentzian fraction
    double gamma = 0.0;      // f_lorentz / 2
};

/// Normalized isotropic Gaussian kernel, weights ~ exp(-(dx^2+dy^2)/(2 sigma^2)).
Kernel gaussian_kernel(double sigma, int radius);

/// Default kernel radius used by the Gaussian-family smoothers.
int gaussian_radius(double sigma);

/// Gaussian envelope modulated by a sine wave along the orientation axis
/// u = dx cos(theta) + dy sin(theta); mean-subtracted to zero sum.
Kernel gabor_kernel(double sigma, double wavelength, double theta, int radius);

/// Mixes component FWHMs into the total width and Lorentzian fraction.
PseudoVoigtParams pseudo_voigt_mix(double f_gauss, double f_lorentz);

/// Normalized radial pseudo-Voigt smoothing kernel.
Kernel pseudo_voigt_kernel(const PseudoVoigtParams& params, int radius);

/// Lorentzian profile modulated by arctan along the orientation axis.
Kernel lmak_kernel(double gamma, double theta, int radius, double steepness = 1.0);

/// Pseudo-Voigt profile modulated by arctan along the orientation axis.
Kernel pvmak_kernel(const PseudoVoigtParams& params, double theta, int radius,
                    double steepness = 1.0);

// Radial profile primitives shared by the kernel builders.
double lorentzian_profile(double rho, double gamma);
double gaussian_profile(double rho, double sigma);

inline double fwhm_to_sigma(double fwhm) { return fwhm / 2.3548200450309493; }  // 2 sqrt(2 ln 2)
inline double fwhm_to_gamma(double fwhm) { return fwhm / 2.0; }

/// True convolution (kernel point-reflected relative to a sliding dot
/// product). Output is not clamped.
RasterImage convolve(const RasterImage& img, const Kernel& k,
                     BorderPolicy border = BorderPolicy::reflect());

/// Sliding dot product without the flip; equals convolve for symmetric kernels.
RasterImage correlate(const RasterImage& img, const Kernel& k,
                      BorderPolicy border = BorderPolicy::reflect());

/// Two-pass separable convolution with a 1-D profile applied along rows then
/// columns. taps must have odd length.
RasterImage convolve_separable(const RasterImage& img, const std::vector<double>& taps,
                               BorderPolicy border = BorderPolicy::reflect());

/// Folds an index into [0, n) under the given policy; returns -1 when the
/// constant fill value should be used instead.
int border_index(int i, int n, const BorderPolicy& border);

}  // namespace radiolith
