#include "radiolith/hog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace radiolith {

std::vector<double> hog_cells(const RasterImage& img, const HogSpec& spec, int& cells_x,
                              int& cells_y) {
    if (img.channels != 1) throw std::invalid_argument("hog: single-channel input required");
    if (spec.cell_size < 2 || spec.n_bins < 2 || spec.block_size < 1 || spec.block_stride < 1)
        throw std::invalid_argument("hog: invalid spec");
    cells_x = img.width / spec.cell_size;
    cells_y = img.height / spec.cell_size;
    if (cells_x < spec.block_size || cells_y < spec.block_size)
        throw std::invalid_argument("hog: image too small for the block geometry");

    std::vector<double> cells(
        static_cast<std::size_t>(cells_x) * cells_y * spec.n_bins, 0.0);
    auto clamp_px = [&](int x, int y) {
        x = std::clamp(x, 0, img.width - 1);
        y = std::clamp(y, 0, img.height - 1);
        return img.at(x, y);
    };

    const int usable_w = cells_x * spec.cell_size;
    const int usable_h = cells_y * spec.cell_size;
    for (int y = 0; y < usable_h; ++y) {
        for (int x = 0; x < usable_w; ++x) {
            double gx = clamp_px(x + 1, y) - clamp_px(x - 1, y);
            double gy = clamp_px(x, y + 1) - clamp_px(x, y - 1);
            double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double ang = std::atan2(gy, gx);
            if (ang < 0.0) ang += M_PI;
            if (ang >= M_PI) ang -= M_PI;
            // Bin centers at (b + 0.5) * pi / n_bins; the vote splits
            // linearly between the two nearest centers, wrapping mod pi.
            double pos = ang / M_PI * spec.n_bins - 0.5;
            int b0 = static_cast<int>(std::floor(pos));
            double frac = pos - b0;
            int bin0 = ((b0 % spec.n_bins) + spec.n_bins) % spec.n_bins;
            int bin1 = (bin0 + 1) % spec.n_bins;
            std::size_t cell =
                (static_cast<std::size_t>(y / spec.cell_size) * cells_x + x / spec.cell_size) *
                spec.n_bins;
            cells[cell + bin0] += mag * (1.0 - frac);
            cells[cell + bin1] += mag * frac;
        }
    }
    return cells;
}

HogDescriptor hog(const RasterImage& img, const HogSpec& spec) {
    int cells_x = 0, cells_y = 0;
    std::vector<double> cells = hog_cells(img, spec, cells_x, cells_y);

    HogDescriptor d;
    d.spec = spec;
    d.blocks_x = (cells_x - spec.block_size) / spec.block_stride + 1;
    d.blocks_y = (cells_y - spec.block_size) / spec.block_stride + 1;
    const int block_len = spec.block_size * spec.block_size * spec.n_bins;
    d.values.resize(static_cast<std::size_t>(d.blocks_y) * d.blocks_x * block_len);

    std::vector<double> block(static_cast<std::size_t>(block_len));
    for (int by = 0; by < d.blocks_y; ++by) {
        for (int bx = 0; bx < d.blocks_x; ++bx) {
            int i = 0;
            for (int cy = 0; cy < spec.block_size; ++cy)
                for (int cx = 0; cx < spec.block_size; ++cx) {
                    std::size_t cell = (static_cast<std::size_t>(by * spec.block_stride + cy) *
                                            cells_x +
                                        bx * spec.block_stride + cx) *
                                       spec.n_bins;
                    for (int b = 0; b < spec.n_bins; ++b) block[i++] = cells[cell + b];
                }
            // L2-hys.
            double n1 = 0.0;
            for (double v : block) n1 += v * v;
            n1 = std::sqrt(n1 + spec.epsilon * spec.epsilon);
            for (double& v : block) v = std::min(v / n1, spec.clip);
            double n2 = 0.0;
            for (double v : block) n2 += v * v;
            n2 = std::sqrt(n2 + spec.epsilon * spec.epsilon);
            std::size_t base = (static_cast<std::size_t>(by) * d.blocks_x + bx) * block_len;
            for (int j = 0; j < block_len; ++j) d.values[base + j] = block[j] / n2;
        }
    }
    return d;
}

RasterImage hog_render(const HogDescriptor& d) {
    const HogSpec& spec = d.spec;
    const int cells_x = (d.blocks_x - 1) * spec.block_stride + spec.block_size;
    const int cells_y = (d.blocks_y - 1) * spec.block_stride + spec.block_size;
    RasterImage out(cells_x * spec.cell_size, cells_y * spec.cell_size, 1, 0.0);

    // Average every cell's bin weights over the blocks that cover it.
    std::vector<double> cell_bins(static_cast<std::size_t>(cells_x) * cells_y * spec.n_bins, 0.0);
    std::vector<int> cover(static_cast<std::size_t>(cells_x) * cells_y, 0);
    const int block_len = spec.block_size * spec.block_size * spec.n_bins;
    for (int by = 0; by < d.blocks_y; ++by)
        for (int bx = 0; bx < d.blocks_x; ++bx) {
            std::size_t base = (static_cast<std::size_t>(by) * d.blocks_x + bx) * block_len;
            int i = 0;
            for (int cy = 0; cy < spec.block_size; ++cy)
                for (int cx = 0; cx < spec.block_size; ++cx) {
                    std::size_t cell =
                        static_cast<std::size_t>(by * spec.block_stride + cy) * cells_x +
                        bx * spec.block_stride + cx;
                    for (int b = 0; b < spec.n_bins; ++b)
                        cell_bins[cell * spec.n_bins + b] += d.values[base + i++];
                    ++cover[cell];
                }
        }

    const double half = spec.cell_size / 2.0;
    for (int cy = 0; cy < cells_y; ++cy)
        for (int cx = 0; cx < cells_x; ++cx) {
            std::size_t cell = static_cast<std::size_t>(cy) * cells_x + cx;
            double inv = cover[cell] > 0 ? 1.0 / cover[cell] : 0.0;
            double ox = cx * spec.cell_size + half;
            double oy = cy * spec.cell_size + half;
            for (int b = 0; b < spec.n_bins; ++b) {
                double m = cell_bins[cell * spec.n_bins + b] * inv;
                if (m <= 0.0) continue;
                double ang = (b + 0.5) * M_PI / spec.n_bins;
                double dx = std::cos(ang), dy = std::sin(ang);
                for (double s = -half + 0.5; s <= half - 0.5; s += 0.25) {
                    int px = static_cast<int>(std::lround(ox + s * dx - 0.5));
                    int py = static_cast<int>(std::lround(oy + s * dy - 0.5));
                    if (out.in_bounds(px, py)) out.at(px, py) = std::max(out.at(px, py), m);
                }
            }
        }
    return out;
}

std::string hog_to_csv(const HogDescriptor& d) {
    std::string csv;
    char buf[32];
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), i + 1 < d.values.size() ? "%.10g," : "%.10g\n",
                      d.values[i]);
        csv += buf;
    }
    return csv;
}

}  // namespace radiolith
