#include "radiolith/edge.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

#include "radiolith/denoise.hpp"
#include "radiolith/segmentation.hpp"
#include "radiolith/util.hpp"

namespace radiolith {

RasterImage EdgeMap::to_image() const {
    RasterImage out(width, height, 1);
    for (std::size_t i = 0; i < mask.size(); ++i) out.pixels[i] = mask[i] ? 1.0 : 0.0;
    return out;
}

std::size_t EdgeMap::edge_count() const {
    std::size_t n = 0;
    for (auto m : mask) n += m ? 1 : 0;
    return n;
}

double GradientField::direction_from_vertical(int x, int y) const {
    double d = std::atan(gx.at(x, y) / gy.at(x, y));
    if (op == GradientOperator::roberts) d -= 3.0 * M_PI / 4.0;
    return d;
}

namespace {

struct Mask3 {
    // weights addressed by [dy+1][dx+1]
    double w[3][3];
};

constexpr Mask3 kSobelX{{{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}}};
constexpr Mask3 kSobelY{{{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}}};
constexpr Mask3 kPrewittX{{{-1, 0, 1}, {-1, 0, 1}, {-1, 0, 1}}};
constexpr Mask3 kPrewittY{{{-1, -1, -1}, {0, 0, 0}, {1, 1, 1}}};
constexpr Mask3 kScharrX{{{-3, 0, 3}, {-10, 0, 10}, {-3, 0, 3}}};
constexpr Mask3 kScharrY{{{-3, -10, -3}, {0, 0, 0}, {3, 10, 3}}};

RasterImage apply_mask3(const RasterImage& img, const Mask3& m) {
    const BorderPolicy border = BorderPolicy::reflect();
    RasterImage out(img.width, img.height, 1);
    // All derivative masks are antisymmetric, so accumulating paired
    // differences w * (I(x+dx, y+dy) - I(x-dx, y-dy)) makes a constant
    // image cancel exactly instead of within rounding.
    parallel_rows(img.height, [&](int y) {
        int ym = border_index(y - 1, img.height, border);
        int yp = border_index(y + 1, img.height, border);
        for (int x = 0; x < img.width; ++x) {
            int xm = border_index(x - 1, img.width, border);
            int xp = border_index(x + 1, img.width, border);
            double acc = m.w[1][2] * (img.at(xp, y) - img.at(xm, y)) +
                         m.w[2][0] * (img.at(xm, yp) - img.at(xp, ym)) +
                         m.w[2][1] * (img.at(x, yp) - img.at(x, ym)) +
                         m.w[2][2] * (img.at(xp, yp) - img.at(xm, ym));
            out.at(x, y) = acc;
        }
    });
    return out;
}

// Diagonal difference pair; anchored at the top-left cell of the 2x2 window.
void roberts_pair(const RasterImage& img, RasterImage& gx, RasterImage& gy) {
    const BorderPolicy border = BorderPolicy::reflect();
    parallel_rows(img.height, [&](int y) {
        int y1 = border_index(y + 1, img.height, border);
        for (int x = 0; x < img.width; ++x) {
            int x1 = border_index(x + 1, img.width, border);
            gx.at(x, y) = img.at(x, y) - img.at(x1, y1);
            gy.at(x, y) = img.at(x1, y) - img.at(x, y1);
        }
    });
}

GradientField assemble(RasterImage gx, RasterImage gy, GradientOperator op) {
    GradientField f;
    f.op = op;
    f.magnitude = RasterImage(gx.width, gx.height, 1);
    f.direction = RasterImage(gx.width, gx.height, 1);
    for (std::size_t i = 0; i < gx.pixels.size(); ++i) {
        f.magnitude.pixels[i] = std::sqrt(gx.pixels[i] * gx.pixels[i] + gy.pixels[i] * gy.pixels[i]);
        double d = std::atan2(gy.pixels[i], gx.pixels[i]);
        if (d <= -M_PI) d = M_PI;
        f.direction.pixels[i] = d;
    }
    f.gx = std::move(gx);
    f.gy = std::move(gy);
    return f;
}

}  // namespace

GradientField gradient(const RasterImage& img, GradientOperator op) {
    if (img.channels != 1) throw std::invalid_argument("gradient: single-channel input required");
    RasterImage gx(img.width, img.height, 1), gy(img.width, img.height, 1);
    switch (op) {
        case GradientOperator::sobel:
            gx = apply_mask3(img, kSobelX);
            gy = apply_mask3(img, kSobelY);
            break;
        case GradientOperator::prewitt:
            gx = apply_mask3(img, kPrewittX);
            gy = apply_mask3(img, kPrewittY);
            break;
        case GradientOperator::scharr:
            gx = apply_mask3(img, kScharrX);
            gy = apply_mask3(img, kScharrY);
            break;
        case GradientOperator::roberts:
            roberts_pair(img, gx, gy);
            break;
    }
    return assemble(std::move(gx), std::move(gy), op);
}

std::array<GradientField, 3> gradient_channels(const RasterImage& rgb, GradientOperator op) {
    auto planes = split_channels(rgb);
    return {gradient(planes[0], op), gradient(planes[1], op), gradient(planes[2], op)};
}

GradientField gradient_value(const RasterImage& rgb, GradientOperator op) {
    return gradient(value_channel(rgb), op);
}

GradientField hybrid_gradient(const RasterImage& img, HybridKind kind) {
    if (img.channels != 1)
        throw std::invalid_argument("hybrid_gradient: single-channel input required");
    RasterImage gx = apply_mask3(img, kScharrX);
    RasterImage gy = apply_mask3(img, kind == HybridKind::scharr_prewitt ? kPrewittY : kSobelY);
    return assemble(std::move(gx), std::move(gy), GradientOperator::scharr);
}

Kernel make_edge_kernel(const KernelEdgeParams& p, double theta) {
    switch (p.family) {
        case KernelFamily::gabor: {
            int r = p.radius > 0 ? p.radius : gaussian_radius(p.sigma);
            return gabor_kernel(p.sigma, p.wavelength, theta, r);
        }
        case KernelFamily::lmak: {
            int r = p.radius > 0 ? p.radius : std::max(1, static_cast<int>(std::ceil(6.0 * p.gamma)));
            return lmak_kernel(p.gamma, theta, r, p.steepness);
        }
        case KernelFamily::pvmak: {
            PseudoVoigtParams mix = pseudo_voigt_mix(p.f_gauss, p.f_lorentz);
            int r = p.radius > 0 ? p.radius : std::max(1, static_cast<int>(std::ceil(3.0 * mix.f)));
            return pvmak_kernel(mix, theta, r, p.steepness);
        }
    }
    throw std::invalid_argument("make_edge_kernel: unknown family");
}

RasterImage kernel_edge_response(const RasterImage& img, const KernelEdgeParams& params) {
    if (params.n_orientations < 1)
        throw std::invalid_argument("kernel_edge_response: n_orientations must be >= 1");
    RasterImage out(img.width, img.height, 1, 0.0);
    for (int i = 0; i < params.n_orientations; ++i) {
        double theta = params.theta + M_PI * i / params.n_orientations;
        RasterImage resp = convolve(img, make_edge_kernel(params, theta), params.border);
        for (std::size_t j = 0; j < out.pixels.size(); ++j) {
            double a = std::fabs(resp.pixels[j]);
            if (a > out.pixels[j]) out.pixels[j] = a;
        }
    }
    return out;
}

RasterImage canny_magnitude(const RasterImage& img, double sigma) {
    RasterImage work = sigma > 0.0 ? gaussian_blur(img, sigma) : img;
    return gradient(work, GradientOperator::sobel).magnitude;
}

EdgeMap canny(const RasterImage& img, double sigma, double low, double high) {
    if (low < 0.0 || low > high) throw std::invalid_argument("canny: need 0 <= low <= high");
    RasterImage work = sigma > 0.0 ? gaussian_blur(img, sigma) : img;
    GradientField g = gradient(work, GradientOperator::sobel);

    const int w = img.width, h = img.height;
    auto mag = [&](int x, int y) -> double {
        if (x < 0 || x >= w || y < 0 || y >= h) return 0.0;
        return g.magnitude.at(x, y);
    };

    // Non-maximum suppression along the quantized gradient direction. The
    // comparison is strict against the trailing neighbor and non-strict
    // against the leading one, so a magnitude plateau two pixels wide keeps
    // exactly one of them.
    RasterImage nms(w, h, 1, 0.0);
    parallel_rows(h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            double m = g.magnitude.at(x, y);
            if (m <= 0.0) continue;
            double a = g.direction.at(x, y);
            if (a < 0) a += M_PI;  // unsigned orientation
            int sector = static_cast<int>(std::lround(a / (M_PI / 4.0))) % 4;
            static constexpr int step[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
            int dx = step[sector][0], dy = step[sector][1];
            if (m > mag(x - dx, y - dy) && m >= mag(x + dx, y + dy)) nms.at(x, y) = m;
        }
    });

    // Hysteresis: flood from strong pixels through weak ones, 8-connected.
    EdgeMap out;
    out.width = w;
    out.height = h;
    out.low = low;
    out.high = high;
    out.mask.assign(static_cast<std::size_t>(w) * h, 0);
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (nms.at(x, y) >= high && nms.at(x, y) > 0.0) {
                out.mask[static_cast<std::size_t>(y) * w + x] = 1;
                queue.emplace_back(x, y);
            }
    while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                std::size_t idx = static_cast<std::size_t>(ny) * w + nx;
                if (out.mask[idx]) continue;
                if (nms.at(nx, ny) >= low && nms.at(nx, ny) > 0.0) {
                    out.mask[idx] = 1;
                    queue.emplace_back(nx, ny);
                }
            }
    }
    return out;
}

EdgeMap canny_otsu(const RasterImage& img, double sigma) {
    RasterImage mag = canny_magnitude(img, sigma);
    double max_mag = 0.0;
    for (double v : mag.pixels) max_mag = std::max(max_mag, v);
    if (max_mag <= 0.0) throw std::invalid_argument("canny_otsu: degenerate gradient magnitude");

    Histogram h;
    for (double v : mag.pixels) ++h.bins[histogram_bin(v / max_mag)];
    h.total = mag.pixel_count();

    OtsuResult t = otsu_from_histogram(h);
    double high = t.threshold * max_mag;
    return canny(img, sigma, 0.5 * high, high);
}

}  // namespace radiolith
