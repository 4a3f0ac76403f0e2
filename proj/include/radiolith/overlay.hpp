#pragma once

#include <vector>

#include "radiolith/blobs.hpp"
#include "radiolith/edge.hpp"
#include "radiolith/raster.hpp"
#include "radiolith/segmentation.hpp"

namespace radiolith {

/// Highlight color used by all overlays.
struct OverlayColor {
    double r = 1.0, g = 0.15, b = 0.15;
};

/// Edge pixels painted over the gray input promoted to RGB.
RasterImage overlay_edges(const RasterImage& img, const EdgeMap& edges,
                          OverlayColor color = {});

/// Circles of the detected radii around blob centers.
RasterImage overlay_blobs(const RasterImage& img, const std::vector<Blob>& blobs,
                          OverlayColor color = {});

/// Boundary lines wherever a pixel has a 4-neighbor with a different label.
RasterImage overlay_labels(const RasterImage& img, const LabelMap& labels,
                           OverlayColor color = {});

}  // namespace radiolith
