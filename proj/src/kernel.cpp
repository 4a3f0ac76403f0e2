#include "radiolith/kernel.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "radiolith/util.hpp"

namespace radiolith {

Kernel::Kernel(int k) : size(k), weights(static_cast<std::size_t>(k) * k, 0.0) {
    if (k < 1 || k % 2 == 0) throw std::invalid_argument("Kernel: size must be odd and >= 1");
}

double Kernel::sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

std::string Kernel::to_text() const {
    std::ostringstream out;
    out.precision(12);
    out << size << "\n";
    for (int j = 0; j < size; ++j) {
        for (int i = 0; i < size; ++i) {
            if (i) out << " ";
            out << weights[static_cast<std::size_t>(j) * size + i];
        }
        out << "\n";
    }
    return out.str();
}

int gaussian_radius(double sigma) {
    return static_cast<int>(std::ceil(3.0 * sigma));
}

Kernel gaussian_kernel(double sigma, int radius) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_kernel: sigma must be > 0");
    if (radius < 1) throw std::invalid_argument("gaussian_kernel: radius must be >= 1");
    Kernel k(2 * radius + 1);
    double total = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            k.weight(dx, dy) = w;
            total += w;
        }
    for (double& w : k.weights) w /= total;
    k.normalized = true;
    return k;
}

namespace {

void subtract_mean(Kernel& k) {
    double mean = k.sum() / static_cast<double>(k.weights.size());
    for (double& w : k.weights) w -= mean;
    k.zero_mean = true;
}

}  // namespace

Kernel gabor_kernel(double sigma, double wavelength, double theta, int radius) {
    if (sigma <= 0.0 || wavelength <= 0.0)
        throw std::invalid_argument("gabor_kernel: sigma and wavelength must be > 0");
    if (radius < 1) throw std::invalid_argument("gabor_kernel: radius must be >= 1");
    Kernel k(2 * radius + 1);
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            double u = dx * ct + dy * st;
            double g = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            k.weight(dx, dy) = g * std::sin(2.0 * M_PI * u / wavelength);
        }
    subtract_mean(k);
    return k;
}

double lorentzian_profile(double rho, double gamma) {
    return gamma / (M_PI * (rho * rho + gamma * gamma));
}

double gaussian_profile(double rho, double sigma) {
    return std::exp(-rho * rho / (2.0 * sigma * sigma)) / (sigma * std::sqrt(2.0 * M_PI));
}

PseudoVoigtParams pseudo_voigt_mix(double f_gauss, double f_lorentz) {
    if (f_gauss < 0.0 || f_lorentz < 0.0 || f_gauss + f_lorentz <= 0.0)
        throw std::invalid_argument("pseudo_voigt_mix: FWHMs must be >= 0 and not both zero");
    PseudoVoigtParams p;
    p.f_gauss = f_gauss;
    p.f_lorentz = f_lorentz;
    p.gamma = fwhm_to_gamma(f_lorentz);
    if (f_lorentz == 0.0) {
        p.f = f_gauss;
        p.eta = 0.0;
        return p;
    }
    if (f_gauss == 0.0) {
        p.f = f_lorentz;
    } else {
        const double g = f_gauss, l = f_lorentz;
        double f5 = g * g * g * g * g
                  + 2.69 * g * g * g * g * l
                  + 2.42 * g * g * g * l * l
                  + 0.078 * g * l * l * l * l
                  + l * l * l * l * l;
        p.f = std::pow(f5, 0.2);
    }
    const double q = f_lorentz / p.f;
    p.eta = 1.36606 * q - 0.47719 * q * q + 0.11116 * q * q * q;
    return p;
}

Kernel pseudo_voigt_kernel(const PseudoVoigtParams& params, int radius) {
    if (params.f <= 0.0) throw std::invalid_argument("pseudo_voigt_kernel: invalid params");
    if (radius < 1) throw std::invalid_argument("pseudo_voigt_kernel: radius must be >= 1");
    const double gamma = fwhm_to_gamma(params.f);
    const double sigma = fwhm_to_sigma(params.f);
    Kernel k(2 * radius + 1);
    double total = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            double rho = std::sqrt(static_cast<double>(dx * dx + dy * dy));
            double w = params.eta * lorentzian_profile(rho, gamma)
                     + (1.0 - params.eta) * gaussian_profile(rho, sigma);
            k.weight(dx, dy) = w;
            total += w;
        }
    for (double& w : k.weights) w /= total;
    k.normalized = true;
    return k;
}

namespace {

Kernel arctan_modulated(int radius, double theta, double steepness,
                        const std::function<double(double)>& profile) {
    Kernel k(2 * radius + 1);
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            double u = dx * ct + dy * st;
            double rho = std::sqrt(static_cast<double>(dx * dx + dy * dy));
            k.weight(dx, dy) = profile(rho) * std::atan(steepness * u);
        }
    subtract_mean(k);
    return k;
}

}  // namespace

Kernel lmak_kernel(double gamma, double theta, int radius, double steepness) {
    if (gamma <= 0.0) throw std::invalid_argument("lmak_kernel: gamma must be > 0");
    if (radius < 1) throw std::invalid_argument("lmak_kernel: radius must be >= 1");
    return arctan_modulated(radius, theta, steepness,
                            [gamma](double rho) { return lorentzian_profile(rho, gamma); });
}

Kernel pvmak_kernel(const PseudoVoigtParams& params, double theta, int radius, double steepness) {
    if (params.f <= 0.0) throw std::invalid_argument("pvmak_kernel: invalid params");
    if (radius < 1) throw std::invalid_argument("pvmak_kernel: radius must be >= 1");
    const double gamma = fwhm_to_gamma(params.f);
    const double sigma = fwhm_to_sigma(params.f);
    const double eta = params.eta;
    return arctan_modulated(radius, theta, steepness, [gamma, sigma, eta](double rho) {
        return eta * lorentzian_profile(rho, gamma) + (1.0 - eta) * gaussian_profile(rho, sigma);
    });
}

int border_index(int i, int n, const BorderPolicy& border) {
    if (i >= 0 && i < n) return i;
    switch (border.mode) {
        case BorderPolicy::Mode::replicate:
            return i < 0 ? 0 : n - 1;
        case BorderPolicy::Mode::constant:
            return -1;
        case BorderPolicy::Mode::reflect:
            // Mirror with edge repetition: -1 -> 0, n -> n-1. Loop handles
            // kernels wider than the image.
            while (i < 0 || i >= n) {
                if (i < 0) i = -i - 1;
                if (i >= n) i = 2 * n - 1 - i;
            }
            return i;
    }
    return 0;
}

namespace {

RasterImage sliding_product(const RasterImage& img, const Kernel& k, const BorderPolicy& border,
                            bool flip) {
    if (img.channels != 1) throw std::invalid_argument("convolve: single-channel input required");
    const int r = k.radius();
    RasterImage out(img.width, img.height, 1);
    parallel_rows(img.height, [&](int y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    double w = flip ? k.weight(-dx, -dy) : k.weight(dx, dy);
                    int sx = border_index(x + dx, img.width, border);
                    int sy = border_index(y + dy, img.height, border);
                    double v = (sx < 0 || sy < 0) ? border.value : img.at(sx, sy);
                    acc += w * v;
                }
            }
            out.at(x, y) = acc;
        }
    });
    return out;
}

}  // namespace

RasterImage convolve(const RasterImage& img, const Kernel& k, BorderPolicy border) {
    return sliding_product(img, k, border, true);
}

RasterImage correlate(const RasterImage& img, const Kernel& k, BorderPolicy border) {
    return sliding_product(img, k, border, false);
}

RasterImage convolve_separable(const RasterImage& img, const std::vector<double>& taps,
                               BorderPolicy border) {
    if (img.channels != 1)
        throw std::invalid_argument("convolve_separable: single-channel input required");
    if (taps.empty() || taps.size() % 2 == 0)
        throw std::invalid_argument("convolve_separable: taps must have odd length");
    const int r = static_cast<int>(taps.size()) / 2;

    RasterImage mid(img.width, img.height, 1);
    parallel_rows(img.height, [&](int y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int d = -r; d <= r; ++d) {
                int sx = border_index(x + d, img.width, border);
                double v = sx < 0 ? border.value : img.at(sx, y);
                acc += taps[static_cast<std::size_t>(d + r)] * v;
            }
            mid.at(x, y) = acc;
        }
    });

    RasterImage out(img.width, img.height, 1);
    parallel_rows(img.height, [&](int y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int d = -r; d <= r; ++d) {
                int sy = border_index(y + d, img.height, border);
                double v = sy < 0 ? border.value : mid.at(x, sy);
                acc += taps[static_cast<std::size_t>(d + r)] * v;
            }
            out.at(x, y) = acc;
        }
    });
    return out;
}

}  // namespace radiolith
