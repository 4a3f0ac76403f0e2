#include "radiolith/denoise.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "radiolith/util.hpp"

namespace radiolith {

RasterImage gaussian_blur(const RasterImage& img, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_blur: sigma must be > 0");
    const int r = gaussian_radius(sigma);
    std::vector<double> taps(static_cast<std::size_t>(2 * r + 1));
    double total = 0.0;
    for (int d = -r; d <= r; ++d) {
        double w = std::exp(-d * d / (2.0 * sigma * sigma));
        taps[static_cast<std::size_t>(d + r)] = w;
        total += w;
    }
    for (double& w : taps) w /= total;
    return convolve_separable(img, taps, BorderPolicy::reflect());
}

namespace {

inline int quantize_level(double v) {
    int q = static_cast<int>(std::lround(v * 255.0));
    return q < 0 ? 0 : (q > 255 ? 255 : q);
}

}  // namespace

RasterImage median_blur(const RasterImage& img, int radius) {
    if (radius < 1) throw std::invalid_argument("median_blur: radius must be >= 1");
    if (img.channels != 1) throw std::invalid_argument("median_blur: single-channel input required");
    const int r = radius;
    const int window = (2 * r + 1) * (2 * r + 1);
    const int rank = (window + 1) / 2;
    const BorderPolicy border = BorderPolicy::reflect();

    // Pre-quantized plane so the sliding histogram works on levels.
    std::vector<int> levels(img.pixel_count());
    for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = quantize_level(img.pixels[i]);

    RasterImage out(img.width, img.height, 1);
    parallel_rows(img.height, [&](int y) {
        std::array<int, 256> hist{};
        auto level_at = [&](int x, int yy) {
            int sx = border_index(x, img.width, border);
            int sy = border_index(yy, img.height, border);
            return levels[static_cast<std::size_t>(sy) * img.width + sx];
        };
        // Histogram of the window at x = 0, then slide one column at a time.
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) ++hist[level_at(dx, y + dy)];
        for (int x = 0; x < img.width; ++x) {
            if (x > 0) {
                for (int dy = -r; dy <= r; ++dy) {
                    --hist[level_at(x - 1 - r, y + dy)];
                    ++hist[level_at(x + r, y + dy)];
                }
            }
            int cum = 0, level = 0;
            for (int b = 0; b < 256; ++b) {
                cum += hist[b];
                if (cum >= rank) {
                    level = b;
                    break;
                }
            }
            out.at(x, y) = level / 255.0;
        }
    });
    return out;
}

RasterImage mean_blur(const RasterImage& img, int radius) {
    if (radius < 1) throw std::invalid_argument("mean_blur: radius must be >= 1");
    if (img.channels != 1) throw std::invalid_argument("mean_blur: single-channel input required");
    const int r = radius;
    const BorderPolicy border = BorderPolicy::reflect();
    const int pw = img.width + 2 * r, ph = img.height + 2 * r;

    // Integral image over the reflect-padded plane.
    std::vector<double> sat(static_cast<std::size_t>(pw + 1) * (ph + 1), 0.0);
    auto sat_at = [&](int x, int y) -> double& {
        return sat[static_cast<std::size_t>(y) * (pw + 1) + x];
    };
    for (int y = 0; y < ph; ++y) {
        double row = 0.0;
        int sy = border_index(y - r, img.height, border);
        for (int x = 0; x < pw; ++x) {
            int sx = border_index(x - r, img.width, border);
            row += img.at(sx, sy);
            sat_at(x + 1, y + 1) = sat_at(x + 1, y) + row;
        }
    }

    const double window = (2 * r + 1) * (2 * r + 1);
    RasterImage out(img.width, img.height, 1);
    parallel_rows(img.height, [&](int y) {
        for (int x = 0; x < img.width; ++x) {
            int x0 = x, y0 = y, x1 = x + 2 * r + 1, y1 = y + 2 * r + 1;
            double s = sat_at(x1, y1) - sat_at(x0, y1) - sat_at(x1, y0) + sat_at(x0, y0);
            out.at(x, y) = s / window;
        }
    });
    return out;
}

RasterImage bilateral(const RasterImage& img, const BilateralParams& params) {
    if (params.sigma_spatial <= 0.0 || params.sigma_range <= 0.0 || params.radius < 1)
        throw std::invalid_argument("bilateral: invalid params");
    if (img.channels != 1) throw std::invalid_argument("bilateral: single-channel input required");
    const int r = params.radius;
    const BorderPolicy border = BorderPolicy::reflect();
    const double inv_2ss = 1.0 / (2.0 * params.sigma_spatial * params.sigma_spatial);
    const double inv_2sr = 1.0 / (2.0 * params.sigma_range * params.sigma_range);

    std::vector<double> spatial(static_cast<std::size_t>(2 * r + 1) * (2 * r + 1));
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            spatial[static_cast<std::size_t>(dy + r) * (2 * r + 1) + (dx + r)] =
                std::exp(-(dx * dx + dy * dy) * inv_2ss);

    RasterImage out(img.width, img.height, 1);
    parallel_rows(img.height, [&](int y) {
        for (int x = 0; x < img.width; ++x) {
            const double center = img.at(x, y);
            double acc = 0.0, wsum = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                int sy = border_index(y + dy, img.height, border);
                for (int dx = -r; dx <= r; ++dx) {
                    int sx = border_index(x + dx, img.width, border);
                    double v = img.at(sx, sy);
                    double d = v - center;
                    double w = spatial[static_cast<std::size_t>(dy + r) * (2 * r + 1) + (dx + r)] *
                               std::exp(-d * d * inv_2sr);
                    acc += w * v;
                    wsum += w;
                }
            }
            out.at(x, y) = acc / wsum;
        }
    });
    return out;
}

RasterImage add_salt_pepper(const RasterImage& img, const NoiseSpec& spec) {
    if (spec.p < 0.0 || spec.p > 1.0)
        throw std::invalid_argument("add_salt_pepper: p must be in [0,1]");
    if (img.channels != 1)
        throw std::invalid_argument("add_salt_pepper: single-channel input required");
    RasterImage out = img;
    if (spec.p == 0.0) return out;
    parallel_rows(img.height, [&](int y) {
        for (int x = 0; x < img.width; ++x) {
            std::uint64_t ctr = static_cast<std::uint64_t>(y) * img.width + x;
            std::uint64_t u = splitmix64(spec.seed ^ (ctr * 0x9E3779B97F4A7C15ULL + 0x1234567ULL));
            if (u64_to_unit(u) < spec.p)
                out.at(x, y) = (splitmix64(u) & 1ULL) ? 1.0 : 0.0;
        }
    });
    return out;
}

}  // namespace radiolith
