#include "radiolith/blobs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "radiolith/denoise.hpp"
#include "radiolith/kernel.hpp"
#include "radiolith/util.hpp"

namespace radiolith {

namespace {

RasterImage smooth_at_scale(const RasterImage& img, double t) {
    return gaussian_blur(img, std::sqrt(t));
}

void hessian_planes(const RasterImage& l, RasterImage& lxx, RasterImage& lyy, RasterImage* lxy) {
    const BorderPolicy border = BorderPolicy::reflect();
    const int w = l.width, h = l.height;
    parallel_rows(h, [&](int y) {
        int ym = border_index(y - 1, h, border), yp = border_index(y + 1, h, border);
        for (int x = 0; x < w; ++x) {
            int xm = border_index(x - 1, w, border), xp = border_index(x + 1, w, border);
            double c = l.at(x, y);
            lxx.at(x, y) = l.at(xp, y) - 2.0 * c + l.at(xm, y);
            lyy.at(x, y) = l.at(x, yp) - 2.0 * c + l.at(x, ym);
            if (lxy)
                lxy->at(x, y) =
                    (l.at(xp, yp) - l.at(xp, ym) - l.at(xm, yp) + l.at(xm, ym)) / 4.0;
        }
    });
}

std::vector<double> geometric_scales(const BlobDetectParams& p) {
    if (!(p.t_min > 0.0) || !(p.t_max > p.t_min) || p.n_scales < 3)
        throw std::invalid_argument("blob detection: need 0 < t_min < t_max and n_scales >= 3");
    std::vector<double> t(static_cast<std::size_t>(p.n_scales));
    const double ratio = std::pow(p.t_max / p.t_min, 1.0 / (p.n_scales - 1));
    for (int i = 0; i < p.n_scales; ++i) t[static_cast<std::size_t>(i)] = p.t_min * std::pow(ratio, i);
    return t;
}

double disk_overlap(const Blob& a, const Blob& b) {
    const double d = std::hypot(a.x - b.x, a.y - b.y);
    const double r1 = a.radius, r2 = b.radius;
    if (d >= r1 + r2) return 0.0;
    const double rmin = std::min(r1, r2);
    if (d <= std::fabs(r1 - r2)) return 1.0;  // smaller disk contained
    // Lens area of two intersecting circles.
    double a1 = r1 * r1 * std::acos((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1));
    double a2 = r2 * r2 * std::acos((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2));
    double tri = 0.5 * std::sqrt(std::max(0.0, (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) *
                                                   (d + r1 + r2)));
    return (a1 + a2 - tri) / (M_PI * rmin * rmin);
}

std::vector<Blob> prune_overlaps(std::vector<Blob> blobs, double max_overlap) {
    std::stable_sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
        return std::fabs(a.response) > std::fabs(b.response);
    });
    std::vector<Blob> kept;
    for (const Blob& b : blobs) {
        bool ok = true;
        for (const Blob& k : kept)
            if (disk_overlap(b, k) > max_overlap) {
                ok = false;
                break;
            }
        if (ok) kept.push_back(b);
    }
    return kept;
}

std::vector<Blob> detect_extrema(const ScaleSpace& ss, const BlobDetectParams& p,
                                 bool signed_polarity) {
    const int n = static_cast<int>(ss.planes.size());
    if (n < 3) throw std::invalid_argument("blob detection: scale space too shallow");
    const int w = ss.planes[0].width, h = ss.planes[0].height;

    std::vector<Blob> found;
    for (int s = 1; s + 1 < n; ++s) {
        const RasterImage& plane = ss.planes[static_cast<std::size_t>(s)];
        for (int y = 1; y + 1 < h; ++y) {
            for (int x = 1; x + 1 < w; ++x) {
                double v = plane.at(x, y);
                if (std::fabs(v) < p.threshold) continue;
                // Positive maxima mark dark blobs; negative minima mark
                // bright ones. Unsigned detectors keep maxima only.
                bool is_max = v > 0.0;
                bool is_min = signed_polarity && v < 0.0;
                if (!is_max && !is_min) continue;
                // Strict extremum over the 26-neighborhood in (x, y, scale).
                for (int ds = -1; ds <= 1 && (is_max || is_min); ++ds)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            if (ds == 0 && dy == 0 && dx == 0) continue;
                            double u = ss.planes[static_cast<std::size_t>(s + ds)].at(x + dx, y + dy);
                            if (v <= u) is_max = false;
                            if (v >= u) is_min = false;
                        }
                if (!is_max && !is_min) continue;
                Blob b;
                b.x = x;
                b.y = y;
                b.t = ss.scales[static_cast<std::size_t>(s)];
                b.radius = std::sqrt(2.0 * b.t);
                b.response = v;
                b.polarity = signed_polarity ? (v > 0.0 ? BlobPolarity::dark : BlobPolarity::bright)
                                             : BlobPolarity::unsigned_response;
                found.push_back(b);
            }
        }
    }
    if (!p.include_border) {
        std::vector<Blob> inner;
        for (const Blob& b : found) {
            double margin = std::ceil(b.radius);
            if (b.x >= margin && b.y >= margin && b.x <= w - 1 - margin && b.y <= h - 1 - margin)
                inner.push_back(b);
        }
        found = std::move(inner);
    }
    return prune_overlaps(std::move(found), p.overlap);
}

}  // namespace

RasterImage log_response(const RasterImage& img, double t) {
    if (t <= 0.0) throw std::invalid_argument("log_response: t must be > 0");
    RasterImage l = smooth_at_scale(img, t);
    RasterImage lxx(l.width, l.height, 1), lyy(l.width, l.height, 1);
    hessian_planes(l, lxx, lyy, nullptr);
    RasterImage out(l.width, l.height, 1);
    for (std::size_t i = 0; i < out.pixels.size(); ++i)
        out.pixels[i] = t * (lxx.pixels[i] + lyy.pixels[i]);
    return out;
}

RasterImage doh_response(const RasterImage& img, double t) {
    if (t <= 0.0) throw std::invalid_argument("doh_response: t must be > 0");
    RasterImage l = smooth_at_scale(img, t);
    RasterImage lxx(l.width, l.height, 1), lyy(l.width, l.height, 1), lxy(l.width, l.height, 1);
    hessian_planes(l, lxx, lyy, &lxy);
    RasterImage out(l.width, l.height, 1);
    for (std::size_t i = 0; i < out.pixels.size(); ++i)
        out.pixels[i] =
            t * t * (lxx.pixels[i] * lyy.pixels[i] - lxy.pixels[i] * lxy.pixels[i]);
    return out;
}

ScaleSpace log_scale_space(const RasterImage& img, const BlobDetectParams& params) {
    ScaleSpace ss;
    ss.scales = geometric_scales(params);
    ss.planes.reserve(ss.scales.size());
    for (double t : ss.scales) ss.planes.push_back(log_response(img, t));
    return ss;
}

ScaleSpace dog_scale_space(const RasterImage& img, const BlobDetectParams& params) {
    const std::vector<double> t = geometric_scales(params);
    std::vector<RasterImage> smoothed;
    smoothed.reserve(t.size());
    for (double ti : t) smoothed.push_back(smooth_at_scale(img, ti));

    ScaleSpace ss;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        const double dt = t[i + 1] - t[i];
        const double t_mid = 0.5 * (t[i] + t[i + 1]);
        // d/dt of the Gaussian family is half the Laplacian, hence the
        // factor 2 to land on the same normalization as log_response.
        const double scale = 2.0 * t_mid / dt;
        RasterImage plane(img.width, img.height, 1);
        for (std::size_t j = 0; j < plane.pixels.size(); ++j)
            plane.pixels[j] = scale * (smoothed[i + 1].pixels[j] - smoothed[i].pixels[j]);
        ss.scales.push_back(t_mid);
        ss.planes.push_back(std::move(plane));
    }
    return ss;
}

ScaleSpace doh_scale_space(const RasterImage& img, const BlobDetectParams& params) {
    ScaleSpace ss;
    ss.scales = geometric_scales(params);
    ss.planes.reserve(ss.scales.size());
    for (double t : ss.scales) ss.planes.push_back(doh_response(img, t));
    return ss;
}

std::vector<Blob> detect_blobs_log(const RasterImage& img, const BlobDetectParams& params) {
    return detect_extrema(log_scale_space(img, params), params, true);
}

std::vector<Blob> detect_blobs_dog(const RasterImage& img, const BlobDetectParams& params) {
    return detect_extrema(dog_scale_space(img, params), params, true);
}

std::vector<Blob> detect_blobs_doh(const RasterImage& img, const BlobDetectParams& params) {
    return detect_extrema(doh_scale_space(img, params), params, false);
}

std::string blobs_to_csv(const std::vector<Blob>& blobs) {
    std::string csv = "x,y,radius,scale,response,polarity\n";
    char line[160];
    for (const Blob& b : blobs) {
        const char* pol = b.polarity == BlobPolarity::dark
                              ? "dark"
                              : (b.polarity == BlobPolarity::bright ? "bright" : "unsigned");
        std::snprintf(line, sizeof(line), "%.10g,%.10g,%.10g,%.10g,%.10g,%s\n", b.x, b.y, b.radius,
                      b.t, b.response, pol);
        csv += line;
    }
    return csv;
}

}  // namespace radiolith
