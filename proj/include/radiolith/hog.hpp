#pragma once

#include <string>
#include <vector>

#include "radiolith/raster.hpp"

namespace radiolith {

struct HogSpec {
    int cell_size = 8;     // pixels per cell side
    int block_size = 2;    // cells per block side
    int n_bins = 9;        // unsigned orientations over [0, 180)
    int block_stride = 1;  // cells
    double epsilon = 1e-5; // L2-hys regularizer
    double clip = 0.2;
};

struct HogDescriptor {
    std::vector<double> values;  // blocks_y x blocks_x x block_size^2 x n_bins
    int blocks_x = 0;
    int blocks_y = 0;
    HogSpec spec;

    std::size_t expected_length() const {
        return static_cast<std::size_t>(blocks_y) * blocks_x * spec.block_size * spec.block_size *
               spec.n_bins;
    }
};

/// Unnormalized per-cell orientation histograms (cells_y x cells_x x n_bins).
/// Votes are gradient magnitudes split linearly between the two nearest bin
/// centers; exposed so the vote-mass bookkeeping is testable.
std::vector<double> hog_cells(const RasterImage& img, const HogSpec& spec, int& cells_x,
                              int& cells_y);

/// Centered-difference gradients, cell binning, then overlapping block
/// normalization (L2 norm with epsilon, clip, renormalize).
HogDescriptor hog(const RasterImage& img, const HogSpec& spec);

/// Star-plot rendering: per cell, one stroke per orientation bin with
/// brightness proportional to the block-averaged bin weight.
RasterImage hog_render(const HogDescriptor& descriptor);

std::string hog_to_csv(const HogDescriptor& descriptor);

}  // namespace radiolith
