#include "radiolith/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "radiolith/kernel.hpp"
#include "radiolith/util.hpp"

namespace radiolith {

StructuringElement StructuringElement::square(int k) {
    if (k < 1 || k % 2 == 0)
        throw std::invalid_argument("StructuringElement::square: size must be odd and >= 1");
    StructuringElement se;
    se.size = k;
    se.mask.assign(static_cast<std::size_t>(k) * k, 1);
    return se;
}

StructuringElement StructuringElement::disk(int r) {
    if (r < 0) throw std::invalid_argument("StructuringElement::disk: radius must be >= 0");
    StructuringElement se;
    se.size = 2 * r + 1;
    se.mask.assign(static_cast<std::size_t>(se.size) * se.size, 0);
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dx * dx + dy * dy <= r * r)
                se.mask[static_cast<std::size_t>(dy + r) * se.size + (dx + r)] = 1;
    return se;
}

StructuringElement StructuringElement::rotated180() const {
    StructuringElement se;
    se.size = size;
    se.mask.assign(mask.size(), 0);
    const int r = radius();
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            se.mask[static_cast<std::size_t>(-dy + r) * size + (-dx + r)] =
                mask[static_cast<std::size_t>(dy + r) * size + (dx + r)];
    return se;
}

namespace {

enum class Extremum { max, min };

RasterImage rank_filter(const RasterImage& img, const StructuringElement& se, Extremum which) {
    if (img.channels != 1)
        throw std::invalid_argument("morphology: single-channel input required");
    const int r = se.radius();
    const BorderPolicy border = BorderPolicy::reflect();
    RasterImage out(img.width, img.height, 1);
    parallel_rows(img.height, [&](int y) {
        for (int x = 0; x < img.width; ++x) {
            double best = which == Extremum::max ? -1e300 : 1e300;
            for (int dy = -r; dy <= r; ++dy) {
                int sy = border_index(y + dy, img.height, border);
                for (int dx = -r; dx <= r; ++dx) {
                    if (!se.cell(dx, dy)) continue;
                    int sx = border_index(x + dx, img.width, border);
                    double v = img.at(sx, sy);
                    best = which == Extremum::max ? std::max(best, v) : std::min(best, v);
                }
            }
            out.at(x, y) = best;
        }
    });
    return out;
}

}  // namespace

RasterImage dilate(const RasterImage& img, const StructuringElement& se) {
    return rank_filter(img, se, Extremum::max);
}

RasterImage erode(const RasterImage& img, const StructuringElement& se) {
    return rank_filter(img, se, Extremum::min);
}

RasterImage open(const RasterImage& img, const StructuringElement& se) {
    return dilate(erode(img, se), se);
}

RasterImage close(const RasterImage& img, const StructuringElement& se) {
    const StructuringElement rot = se.rotated180();
    return erode(dilate(img, rot), rot);
}

RasterImage morph_gradient(const RasterImage& img, const StructuringElement& se) {
    RasterImage hi = dilate(img, se);
    RasterImage lo = erode(img, se);
    RasterImage out(img.width, img.height, 1);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = hi.pixels[i] - lo.pixels[i];
    return out;
}

RasterImage image_diff(const RasterImage& a, const RasterImage& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("image_diff: dimension mismatch");
    RasterImage out(a.width, a.height, a.channels);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        double d = std::fabs(a.pixels[i] - b.pixels[i]);
        out.pixels[i] = d > 1.0 ? 1.0 : d;
    }
    return out;
}

}  // namespace radiolith
