#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radiolith/raster.hpp"

namespace radiolith {

/// Per-pixel integer region labels. Labels in use are 1..n_labels; 0 is
/// reserved for "unassigned" in marker maps.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> labels;
    int n_labels = 0;

    LabelMap() = default;
    LabelMap(int w, int h, std::int32_t fill = 0)
        : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}

    std::int32_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::int32_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

struct OtsuResult {
    double threshold = 0.0;            // bin boundary (cut_bin + 1) / 256
    int cut_bin = 0;                   // last bin of the lower class
    double between_class_variance = 0.0;
};

struct SlicParams {
    int n_segments = 100;
    double compactness = 10.0;
    int max_iter = 10;
    std::uint64_t seed = 0;  // reserved; the default pipeline is deterministic
};

struct FelzenszwalbParams {
    double k = 0.3;       // region-size preference, tau(C) = k / |C|
    double sigma = 0.8;   // pre-smoothing
    int min_size = 20;
};

/// Binary split: label 2 where intensity > t, label 1 otherwise. t is on [0,1].
LabelMap threshold(const RasterImage& img, double t);

/// Maximizes between-class variance over the 256-bin histogram; ties go to
/// the lower bin. Throws on a constant image.
OtsuResult otsu(const RasterImage& img);
OtsuResult otsu_from_histogram(const Histogram& h);

struct KMeansResult {
    LabelMap labels;
    std::vector<double> centroids;        // ascending; label i+1 = centroids[i]
    std::vector<double> inertia_history;  // total within-cluster variance per iteration
};

/// 1-D k-means over intensities with seeded k-means++ initialization.
/// Labels are ordered by ascending centroid.
KMeansResult kmeans_intensity(const RasterImage& img, int k, std::uint64_t seed);

/// Priority flood from the markers over ascending gradient values. Every
/// pixel receives the label of the basin reaching it first; ties break on
/// insertion order.
LabelMap watershed(const RasterImage& gradient_img, const LabelMap& markers);

/// Markers from 8-connected components of the low-gradient mask
/// (morphological gradient with disk(1), cut at the given percentile).
LabelMap auto_markers(const RasterImage& img, double low_gradient_percentile);
LabelMap auto_markers_from_gradient(const RasterImage& gradient_img,
                                    double low_gradient_percentile);

/// Grid-seeded local k-means over (scaled intensity, x, y), then 4-connected
/// enforcement that merges fragments into adjacent segments.
LabelMap slic(const RasterImage& img, const SlicParams& params);

/// Graph merging in ascending edge-weight order over the 8-connected grid,
/// then small-component absorption.
LabelMap felzenszwalb(const RasterImage& img, const FelzenszwalbParams& params);

/// Keeps intensity where mask == target_label, zero elsewhere.
RasterImage threshold_mask_apply(const RasterImage& img, const LabelMap& mask,
                                 std::int32_t target_label);

/// Gray rendering of a label map, labels scaled across [0,255].
RasterImage label_map_to_image(const LabelMap& map);

/// CSV rows "label,pixel_count,mean_intensity".
std::string label_map_to_csv(const LabelMap& map, const RasterImage& img);

}  // namespace radiolith
