#include "radiolith/overlay.hpp"

#include <cmath>
#include <stdexcept>

namespace radiolith {

namespace {

void paint(RasterImage& rgb, int x, int y, const OverlayColor& c) {
    if (!rgb.in_bounds(x, y)) return;
    rgb.at(x, y, 0) = c.r;
    rgb.at(x, y, 1) = c.g;
    rgb.at(x, y, 2) = c.b;
}

}  // namespace

RasterImage overlay_edges(const RasterImage& img, const EdgeMap& edges, OverlayColor color) {
    if (img.width != edges.width || img.height != edges.height)
        throw std::invalid_argument("overlay_edges: dimension mismatch");
    RasterImage out = to_rgb(img);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (edges.at(x, y)) paint(out, x, y, color);
    return out;
}

RasterImage overlay_blobs(const RasterImage& img, const std::vector<Blob>& blobs,
                          OverlayColor color) {
    RasterImage out = to_rgb(img);
    for (const Blob& b : blobs) {
        int steps = std::max(16, static_cast<int>(std::ceil(2.0 * M_PI * b.radius * 2.0)));
        for (int i = 0; i < steps; ++i) {
            double a = 2.0 * M_PI * i / steps;
            int px = static_cast<int>(std::lround(b.x + b.radius * std::cos(a)));
            int py = static_cast<int>(std::lround(b.y + b.radius * std::sin(a)));
            paint(out, px, py, color);
        }
    }
    return out;
}

RasterImage overlay_labels(const RasterImage& img, const LabelMap& labels, OverlayColor color) {
    if (img.width != labels.width || img.height != labels.height)
        throw std::invalid_argument("overlay_labels: dimension mismatch");
    RasterImage out = to_rgb(img);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            bool boundary = (x + 1 < img.width && labels.at(x + 1, y) != labels.at(x, y)) ||
                            (y + 1 < img.height && labels.at(x, y + 1) != labels.at(x, y)) ||
                            (x > 0 && labels.at(x - 1, y) != labels.at(x, y)) ||
                            (y > 0 && labels.at(x, y - 1) != labels.at(x, y));
            if (boundary) paint(out, x, y, color);
        }
    return out;
}

}  // namespace radiolith
