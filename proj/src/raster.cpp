#include "radiolith/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radiolith {

RasterImage::RasterImage(int w, int h, int c, double fill)
    : width(w), height(h), channels(c),
      pixels(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 1 || h < 1 || (c != 1 && c != 3))
        throw std::invalid_argument("RasterImage: bad dimensions");
}

RasterImage flip(const RasterImage& img, FlipAxis axis) {
    RasterImage out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            int sx = axis == FlipAxis::horizontal ? img.width - 1 - x : x;
            int sy = axis == FlipAxis::vertical ? img.height - 1 - y : y;
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

namespace {

double sample_bilinear(const RasterImage& img, double x, double y, int c) {
    // Out-of-source samples contribute 0.
    if (x < -0.5 || y < -0.5 || x > img.width - 0.5 || y > img.height - 0.5)
        return 0.0;
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double fx = x - x0;
    double fy = y - y0;
    auto px = [&](int xi, int yi) -> double {
        if (!img.in_bounds(xi, yi)) return 0.0;
        return img.at(xi, yi, c);
    };
    double v00 = px(x0, y0), v10 = px(x0 + 1, y0);
    double v01 = px(x0, y0 + 1), v11 = px(x0 + 1, y0 + 1);
    return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
}

double sample_clamped_bilinear(const RasterImage& img, double x, double y, int c) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    int x0 = std::min(static_cast<int>(std::floor(x)), img.width - 1);
    int y0 = std::min(static_cast<int>(std::floor(y)), img.height - 1);
    int x1 = std::min(x0 + 1, img.width - 1);
    int y1 = std::min(y0 + 1, img.height - 1);
    double fx = x - x0;
    double fy = y - y0;
    double v00 = img.at(x0, y0, c), v10 = img.at(x1, y0, c);
    double v01 = img.at(x0, y1, c), v11 = img.at(x1, y1, c);
    return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
}

}  // namespace

RasterImage rotate(const RasterImage& img, double angle_deg, bool reshape) {
    const double th = angle_deg * M_PI / 180.0;
    double c = std::cos(th), s = std::sin(th);
    // Snap quarter-turn residues so the bounding box and sampling grid stay
    // exact for multiples of 90 degrees.
    auto snap = [](double v) {
        if (std::fabs(v) < 1e-12) return 0.0;
        if (std::fabs(v - 1.0) < 1e-12) return 1.0;
        if (std::fabs(v + 1.0) < 1e-12) return -1.0;
        return v;
    };
    c = snap(c);
    s = snap(s);

    int ow = img.width, oh = img.height;
    if (reshape) {
        ow = static_cast<int>(std::ceil(img.width * std::fabs(c) + img.height * std::fabs(s)));
        oh = static_cast<int>(std::ceil(img.width * std::fabs(s) + img.height * std::fabs(c)));
    }
    RasterImage out(ow, oh, img.channels);

    const double cx_src = (img.width - 1) / 2.0, cy_src = (img.height - 1) / 2.0;
    const double cx_dst = (ow - 1) / 2.0, cy_dst = (oh - 1) / 2.0;

    // Screen-space anti-clockwise rotation with y growing downward; the
    // inverse map applied per output pixel is the clockwise rotation.
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double dx = x - cx_dst, dy = y - cy_dst;
            double sx = dx * c - dy * s + cx_src;
            double sy = dx * s + dy * c + cy_src;
            for (int ch = 0; ch < img.channels; ++ch)
                out.at(x, y, ch) = sample_bilinear(img, sx, sy, ch);
        }
    }
    return out;
}

RasterImage rescale(const RasterImage& img, double factor, Interp method) {
    if (factor <= 0.0) throw std::invalid_argument("rescale: factor must be > 0");
    int ow = static_cast<int>(std::lround(factor * img.width));
    int oh = static_cast<int>(std::lround(factor * img.height));
    if (ow < 1 || oh < 1) throw std::invalid_argument("rescale: degenerate output size");

    RasterImage out(ow, oh, img.channels);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            // Center-aligned sample positions.
            double sx = (x + 0.5) / factor - 0.5;
            double sy = (y + 0.5) / factor - 0.5;
            for (int c = 0; c < img.channels; ++c) {
                if (method == Interp::nearest) {
                    int xi = std::clamp(static_cast<int>(std::lround(sx)), 0, img.width - 1);
                    int yi = std::clamp(static_cast<int>(std::lround(sy)), 0, img.height - 1);
                    out.at(x, y, c) = img.at(xi, yi, c);
                } else {
                    out.at(x, y, c) = sample_clamped_bilinear(img, sx, sy, c);
                }
            }
        }
    }
    return out;
}

RasterImage crop(const RasterImage& img, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > img.width || y0 + h > img.height)
        throw std::invalid_argument("crop: window out of bounds");
    RasterImage out(w, h, img.channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
    return out;
}

Centroid centroid(const RasterImage& img) {
    if (img.channels != 1) throw std::invalid_argument("centroid: single-channel input required");
    // Fixed accumulation order: within each row, then across rows.
    double total = 0.0, sx = 0.0, sy = 0.0;
    for (int y = 0; y < img.height; ++y) {
        double row_sum = 0.0, row_sx = 0.0;
        for (int x = 0; x < img.width; ++x) {
            double v = img.at(x, y);
            row_sum += v;
            row_sx += v * x;
        }
        total += row_sum;
        sx += row_sx;
        sy += row_sum * y;
    }
    if (total <= 0.0) throw std::invalid_argument("centroid: all-zero image");
    return {sx / total, sy / total};
}

Histogram histogram(const RasterImage& img) {
    if (img.channels != 1) throw std::invalid_argument("histogram: single-channel input required");
    Histogram h;
    for (double v : img.pixels) ++h.bins[histogram_bin(v)];
    h.total = img.pixel_count();
    return h;
}

RasterImage to_gray(const RasterImage& rgb) {
    if (rgb.channels != 3) throw std::invalid_argument("to_gray: 3-channel input required");
    RasterImage out(rgb.width, rgb.height, 1);
    for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x)
            out.at(x, y) = 0.299 * rgb.at(x, y, 0) + 0.587 * rgb.at(x, y, 1) + 0.114 * rgb.at(x, y, 2);
    return out;
}

RasterImage value_channel(const RasterImage& rgb) {
    if (rgb.channels != 3) throw std::invalid_argument("value_channel: 3-channel input required");
    RasterImage out(rgb.width, rgb.height, 1);
    for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x)
            out.at(x, y) = std::max({rgb.at(x, y, 0), rgb.at(x, y, 1), rgb.at(x, y, 2)});
    return out;
}

std::array<RasterImage, 3> split_channels(const RasterImage& rgb) {
    if (rgb.channels != 3) throw std::invalid_argument("split_channels: 3-channel input required");
    std::array<RasterImage, 3> planes{RasterImage(rgb.width, rgb.height, 1),
                                      RasterImage(rgb.width, rgb.height, 1),
                                      RasterImage(rgb.width, rgb.height, 1)};
    for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x)
            for (int c = 0; c < 3; ++c)
                planes[c].at(x, y) = rgb.at(x, y, c);
    return planes;
}

RasterImage merge_channels(const RasterImage& r, const RasterImage& g, const RasterImage& b) {
    if (!r.same_dims(g) || !r.same_dims(b) || r.channels != 1)
        throw std::invalid_argument("merge_channels: three matching gray planes required");
    RasterImage out(r.width, r.height, 3);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) {
            out.at(x, y, 0) = r.at(x, y);
            out.at(x, y, 1) = g.at(x, y);
            out.at(x, y, 2) = b.at(x, y);
        }
    return out;
}

RasterImage to_rgb(const RasterImage& img) {
    if (img.channels == 3) return img;
    RasterImage out(img.width, img.height, 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = img.at(x, y);
    return out;
}

}  // namespace radiolith
