#pragma once

#include <vector>

#include "radiolith/raster.hpp"

namespace radiolith {

/// Binary neighborhood mask with the origin at the center of an odd
/// bounding box. The origin cell is always set.
struct StructuringElement {
    int size = 1;  // odd bounding box side
    std::vector<std::uint8_t> mask;

    static StructuringElement square(int k);
    /// Closed disk: cells with dx^2 + dy^2 <= r^2, bounding box 2r+1.
    static StructuringElement disk(int r);

    int radius() const { return size / 2; }
    bool cell(int dx, int dy) const {
        return mask[static_cast<std::size_t>(dy + radius()) * size + (dx + radius())] != 0;
    }
    StructuringElement rotated180() const;
    bool operator==(const StructuringElement& o) const = default;
};

// Grayscale operators over the element neighborhood, reflect border.
RasterImage dilate(const RasterImage& img, const StructuringElement& se);
RasterImage erode(const RasterImage& img, const StructuringElement& se);

/// Erosion then dilation with the same element.
RasterImage open(const RasterImage& img, const StructuringElement& se);

/// Dilation then erosion, both with the 180-degree rotated element.
RasterImage close(const RasterImage& img, const StructuringElement& se);

/// dilate - erode, pixel-wise.
RasterImage morph_gradient(const RasterImage& img, const StructuringElement& se);

/// Clamped absolute difference |a - b|.
RasterImage image_diff(const RasterImage& a, const RasterImage& b);

}  // namespace radiolith
