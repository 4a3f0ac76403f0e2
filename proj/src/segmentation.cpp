#include "radiolith/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

#include "radiolith/denoise.hpp"
#include "radiolith/morphology.hpp"
#include "radiolith/util.hpp"

namespace radiolith {

LabelMap threshold(const RasterImage& img, double t) {
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("threshold: t must be in [0,1]");
    if (img.channels != 1) throw std::invalid_argument("threshold: single-channel input required");
    LabelMap out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out.labels[i] = img.pixels[i] > t ? 2 : 1;
    out.n_labels = 2;
    return out;
}

OtsuResult otsu_from_histogram(const Histogram& h) {
    int nonzero = 0;
    for (auto b : h.bins) nonzero += b > 0 ? 1 : 0;
    if (nonzero < 2) throw std::invalid_argument("otsu: histogram needs >= 2 nonzero bins");

    // Between-class variance written as (s0 W - S w0)^2 / (w0 w1); the
    // numerator stays integral, so mirror-symmetric cuts compare exactly
    // equal and the strict scan resolves ties toward the lower bin.
    const std::uint64_t W = h.total;
    std::uint64_t S = 0;
    for (int i = 0; i < 256; ++i) S += static_cast<std::uint64_t>(i) * h.bins[i];

    OtsuResult best;
    double best_var = -1.0;
    std::uint64_t w0 = 0, s0 = 0;
    for (int t = 0; t < 255; ++t) {
        w0 += h.bins[t];
        s0 += static_cast<std::uint64_t>(t) * h.bins[t];
        std::uint64_t w1 = W - w0;
        if (w0 == 0 || w1 == 0) continue;
        double num = static_cast<double>(s0) * static_cast<double>(W) -
                     static_cast<double>(S) * static_cast<double>(w0);
        double var = num * num / (static_cast<double>(w0) * static_cast<double>(w1));
        if (var > best_var) {
            best_var = var;
            best.cut_bin = t;
        }
    }
    best.threshold = (best.cut_bin + 1) / 256.0;
    best.between_class_variance = best_var;
    return best;
}

OtsuResult otsu(const RasterImage& img) { return otsu_from_histogram(histogram(img)); }

KMeansResult kmeans_intensity(const RasterImage& img, int k, std::uint64_t seed) {
    if (img.channels != 1) throw std::invalid_argument("kmeans: single-channel input required");
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    std::vector<double> distinct(img.pixels);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (static_cast<std::size_t>(k) > distinct.size())
        throw std::invalid_argument("kmeans: k exceeds the number of distinct intensities");

    const std::vector<double>& v = img.pixels;
    const std::size_t n = v.size();
    SplitMix64 rng(seed);

    // k-means++ over the pixel population.
    std::vector<double> centers;
    centers.push_back(v[static_cast<std::size_t>(rng.next() % n)]);
    std::vector<double> d2(n);
    while (centers.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (double c : centers) best = std::min(best, (v[i] - c) * (v[i] - c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            // All mass already covered; take the next unused distinct value.
            for (double val : distinct)
                if (std::find(centers.begin(), centers.end(), val) == centers.end()) {
                    centers.push_back(val);
                    break;
                }
            continue;
        }
        double target = rng.next_unit() * total;
        std::size_t pick = n - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (acc >= target) {
                pick = i;
                break;
            }
        }
        centers.push_back(v[pick]);
    }

    std::vector<int> assign(n, 0);
    KMeansResult result;
    for (int iter = 0; iter < 300; ++iter) {
        // Assignment; ties go to the lower center index.
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int best_c = 0;
            double best_d = std::numeric_limits<double>::max();
            for (int c = 0; c < k; ++c) {
                double d = (v[i] - centers[c]) * (v[i] - centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best_c = c;
                }
            }
            assign[i] = best_c;
            inertia += best_d;
        }
        result.inertia_history.push_back(inertia);

        std::vector<double> sum(k, 0.0);
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[assign[i]] += v[i];
            ++count[assign[i]];
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            if (count[c] == 0) {
                // Re-seed an emptied cluster at the point farthest from its center.
                std::size_t far_i = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double d = (v[i] - centers[assign[i]]) * (v[i] - centers[assign[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                shift += std::fabs(centers[c] - v[far_i]);
                centers[c] = v[far_i];
                continue;
            }
            double next = sum[c] / static_cast<double>(count[c]);
            shift = std::max(shift, std::fabs(next - centers[c]));
            centers[c] = next;
        }
        if (shift < 1e-4) break;
    }

    // Final assignment against the settled centers, labels by ascending center.
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return centers[a] < centers[b]; });
    std::vector<int> rank(k);
    for (int i = 0; i < k; ++i) rank[order[i]] = i;

    result.labels = LabelMap(img.width, img.height);
    for (std::size_t i = 0; i < n; ++i) {
        int best_c = 0;
        double best_d = std::numeric_limits<double>::max();
        for (int c = 0; c < k; ++c) {
            double d = (v[i] - centers[c]) * (v[i] - centers[c]);
            if (d < best_d) {
                best_d = d;
                best_c = c;
            }
        }
        result.labels.labels[i] = rank[best_c] + 1;
    }
    result.labels.n_labels = k;
    result.centroids.resize(k);
    for (int i = 0; i < k; ++i) result.centroids[i] = centers[order[i]];
    return result;
}

LabelMap watershed(const RasterImage& gradient_img, const LabelMap& markers) {
    if (gradient_img.channels != 1)
        throw std::invalid_argument("watershed: single-channel gradient required");
    if (gradient_img.width != markers.width || gradient_img.height != markers.height)
        throw std::invalid_argument("watershed: marker dimensions mismatch");
    const int w = gradient_img.width, h = gradient_img.height;

    LabelMap out = markers;
    struct Entry {
        double priority;
        std::uint64_t seq;
        int x, y;
        std::int32_t label;
        bool operator>(const Entry& o) const {
            if (priority != o.priority) return priority > o.priority;
            return seq > o.seq;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
    std::uint64_t seq = 0;
    bool any_marker = false;

    auto push_neighbors = [&](int x, int y, std::int32_t label) {
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                if (out.at(nx, ny) != 0) continue;
                pq.push({gradient_img.at(nx, ny), seq++, nx, ny, label});
            }
    };

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (out.at(x, y) != 0) {
                any_marker = true;
                push_neighbors(x, y, out.at(x, y));
            }
    if (!any_marker) throw std::invalid_argument("watershed: markers are empty");

    std::int32_t max_label = 0;
    for (auto l : out.labels) max_label = std::max(max_label, l);

    while (!pq.empty()) {
        Entry e = pq.top();
        pq.pop();
        if (out.at(e.x, e.y) != 0) continue;
        out.at(e.x, e.y) = e.label;
        push_neighbors(e.x, e.y, e.label);
    }
    out.n_labels = max_label;
    return out;
}

namespace {

double percentile_value(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    // Nearest-rank: the smallest value with at least p percent of mass at or
    // below it.
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(p / 100.0 * static_cast<double>(values.size())));
    if (rank == 0) rank = 1;
    if (rank > values.size()) rank = values.size();
    return values[rank - 1];
}

}  // namespace

LabelMap auto_markers_from_gradient(const RasterImage& gradient_img, double p) {
    if (p <= 0.0 || p >= 100.0)
        throw std::invalid_argument("auto_markers: percentile must be in (0,100)");
    const int w = gradient_img.width, h = gradient_img.height;
    const double cut = percentile_value(gradient_img.pixels, p);

    LabelMap out(w, h, 0);
    std::int32_t next = 0;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (gradient_img.at(x, y) > cut || out.at(x, y) != 0) continue;
            ++next;
            out.at(x, y) = next;
            stack.emplace_back(x, y);
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                        if (out.at(nx, ny) != 0 || gradient_img.at(nx, ny) > cut) continue;
                        out.at(nx, ny) = next;
                        stack.emplace_back(nx, ny);
                    }
            }
        }
    out.n_labels = next;
    return out;
}

LabelMap auto_markers(const RasterImage& img, double low_gradient_percentile) {
    return auto_markers_from_gradient(morph_gradient(img, StructuringElement::disk(1)),
                                      low_gradient_percentile);
}

namespace {

// Scale that puts intensity differences on a comparable footing with the
// spatial term of the SLIC distance; mirrors the ~100-unit lightness range
// the standard formulation assumes.
constexpr double kSlicIntensityScale = 100.0;

struct SlicCenter {
    double intensity, x, y;
};

LabelMap enforce_connectivity(const std::vector<int>& raw, int w, int h, int min_size) {
    // Flood 4-connected fragments in raster order; fragments below min_size
    // are absorbed into the final label of an already-scanned neighbor.
    LabelMap out(w, h, 0);
    std::vector<std::int32_t> final_size;
    std::vector<std::pair<int, int>> pixels;
    std::vector<std::pair<int, int>> stack;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (out.at(x, y) != 0) continue;
            pixels.clear();
            stack.emplace_back(x, y);
            out.at(x, y) = -1;  // visiting
            std::int32_t adjacent_final = 0;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                pixels.emplace_back(cx, cy);
                constexpr int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                for (auto& d : nb) {
                    int nx = cx + d[0], ny = cy + d[1];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    std::int32_t l = out.at(nx, ny);
                    if (l > 0 && adjacent_final == 0) adjacent_final = l;
                    if (l != 0) continue;
                    if (raw[static_cast<std::size_t>(ny) * w + nx] !=
                        raw[static_cast<std::size_t>(cy) * w + cx])
                        continue;
                    out.at(nx, ny) = -1;
                    stack.emplace_back(nx, ny);
                }
            }
            std::int32_t target;
            if (static_cast<int>(pixels.size()) < min_size && adjacent_final != 0) {
                target = adjacent_final;
                final_size[target - 1] += static_cast<std::int32_t>(pixels.size());
            } else {
                final_size.push_back(static_cast<std::int32_t>(pixels.size()));
                target = static_cast<std::int32_t>(final_size.size());
            }
            for (auto& p : pixels) out.at(p.first, p.second) = target;
        }
    }

    // The raster-first fragment has no scanned neighbor to absorb into; fix
    // it up afterward when it is still undersized (later fragments may have
    // been absorbed into it).
    if (final_size.size() > 1 && final_size[0] < min_size) {
        std::int32_t absorb = 0;
        for (int y = 0; y < h && absorb == 0; ++y)
            for (int x = 0; x < w && absorb == 0; ++x) {
                if (out.at(x, y) != 1) continue;
                constexpr int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                for (auto& d : nb) {
                    int nx = x + d[0], ny = y + d[1];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    if (out.at(nx, ny) > 1) {
                        absorb = out.at(nx, ny);
                        break;
                    }
                }
            }
        if (absorb != 0) {
            for (auto& l : out.labels)
                if (l == 1) l = absorb;
            for (auto& l : out.labels) --l;  // close the gap left by label 1
            final_size.erase(final_size.begin());
        }
    }
    out.n_labels = static_cast<int>(final_size.size());
    return out;
}

}  // namespace

LabelMap slic(const RasterImage& img, const SlicParams& params) {
    if (img.channels != 1) throw std::invalid_argument("slic: single-channel input required");
    const int w = img.width, h = img.height;
    const std::size_t n = img.pixel_count();
    if (params.n_segments < 1 || static_cast<std::size_t>(params.n_segments) > n)
        throw std::invalid_argument("slic: n_segments must be in [1, pixel count]");
    if (params.compactness <= 0.0) throw std::invalid_argument("slic: compactness must be > 0");

    const double S = std::sqrt(static_cast<double>(n) / params.n_segments);
    const int nx = std::max(1, static_cast<int>(std::lround(w / S)));
    const int ny = std::max(1, static_cast<int>(std::lround(h / S)));

    std::vector<SlicCenter> centers;
    centers.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double cx = (i + 0.5) * w / nx;
            double cy = (j + 0.5) * h / ny;
            int px = std::clamp(static_cast<int>(cx), 0, w - 1);
            int py = std::clamp(static_cast<int>(cy), 0, h - 1);
            centers.push_back({img.at(px, py) * kSlicIntensityScale, cx, cy});
        }
    const int k = static_cast<int>(centers.size());

    // Initial assignment by grid cell.
    std::vector<int> label(n);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int i = std::min(nx - 1, x * nx / w);
            int j = std::min(ny - 1, y * ny / h);
            label[static_cast<std::size_t>(y) * w + x] = j * nx + i;
        }

    const double m2 = params.compactness * params.compactness;
    const double inv_s2 = 1.0 / (S * S);
    std::vector<double> dist(n);
    const int reach = static_cast<int>(std::ceil(S));

    for (int iter = 0; iter < params.max_iter; ++iter) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::max());
        for (int c = 0; c < k; ++c) {
            const SlicCenter& ctr = centers[c];
            int x0 = std::max(0, static_cast<int>(ctr.x) - reach);
            int x1 = std::min(w - 1, static_cast<int>(ctr.x) + reach);
            int y0 = std::max(0, static_cast<int>(ctr.y) - reach);
            int y1 = std::min(h - 1, static_cast<int>(ctr.y) + reach);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    std::size_t idx = static_cast<std::size_t>(y) * w + x;
                    double dc = img.pixels[idx] * kSlicIntensityScale - ctr.intensity;
                    double dsx = x - ctr.x, dsy = y - ctr.y;
                    double d = dc * dc + (dsx * dsx + dsy * dsy) * inv_s2 * m2;
                    if (d < dist[idx]) {
                        dist[idx] = d;
                        label[idx] = c;
                    }
                }
        }
        std::vector<double> si(k, 0.0), sx(k, 0.0), sy(k, 0.0);
        std::vector<std::size_t> cnt(k, 0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                std::size_t idx = static_cast<std::size_t>(y) * w + x;
                int c = label[idx];
                si[c] += img.pixels[idx] * kSlicIntensityScale;
                sx[c] += x;
                sy[c] += y;
                ++cnt[c];
            }
        for (int c = 0; c < k; ++c)
            if (cnt[c] > 0) {
                centers[c].intensity = si[c] / cnt[c];
                centers[c].x = sx[c] / cnt[c];
                centers[c].y = sy[c] / cnt[c];
            }
    }

    // Fragments below half the nominal segment area are absorbed; with the
    // ceiling every surviving segment has >= n/(2 n_segments) pixels, which
    // bounds the final label count by 2 n_segments.
    const std::size_t two_k = 2 * static_cast<std::size_t>(params.n_segments);
    const int min_size = static_cast<int>((n + two_k - 1) / two_k);
    return enforce_connectivity(label, w, h, std::max(1, min_size));
}

namespace {

struct GraphEdge {
    float weight;
    std::int32_t a, b;
};

class DisjointSet {
  public:
    explicit DisjointSet(std::int32_t n) : parent_(n), rank_(n, 0), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    std::int32_t find(std::int32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    std::int32_t join(std::int32_t a, std::int32_t b) {
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        if (rank_[a] == rank_[b]) ++rank_[a];
        return a;
    }
    std::int32_t size(std::int32_t x) { return size_[find(x)]; }

  private:
    std::vector<std::int32_t> parent_, rank_;
    std::vector<std::int32_t> size_;
};

}  // namespace

LabelMap felzenszwalb(const RasterImage& img, const FelzenszwalbParams& params) {
    if (img.channels != 1)
        throw std::invalid_argument("felzenszwalb: single-channel input required");
    if (params.k <= 0.0 || params.sigma < 0.0 || params.min_size < 1)
        throw std::invalid_argument("felzenszwalb: invalid params");

    RasterImage smooth = params.sigma > 0.0 ? gaussian_blur(img, params.sigma) : img;
    const int w = img.width, h = img.height;
    const std::int32_t n = static_cast<std::int32_t>(img.pixel_count());

    std::vector<GraphEdge> edges;
    edges.reserve(static_cast<std::size_t>(n) * 4);
    auto idx = [&](int x, int y) { return static_cast<std::int32_t>(y * w + x); };
    auto add_edge = [&](int x0, int y0, int x1, int y1) {
        float d = static_cast<float>(std::fabs(smooth.at(x0, y0) - smooth.at(x1, y1)));
        edges.push_back({d, idx(x0, y0), idx(x1, y1)});
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (x + 1 < w) add_edge(x, y, x + 1, y);
            if (y + 1 < h) add_edge(x, y, x, y + 1);
            if (x + 1 < w && y + 1 < h) add_edge(x, y, x + 1, y + 1);
            if (x > 0 && y + 1 < h) add_edge(x, y, x - 1, y + 1);
        }
    std::stable_sort(edges.begin(), edges.end(),
                     [](const GraphEdge& a, const GraphEdge& b) { return a.weight < b.weight; });

    DisjointSet dsu(n);
    std::vector<float> internal(n, 0.0f);  // max MST edge per component root
    for (const GraphEdge& e : edges) {
        std::int32_t a = dsu.find(e.a), b = dsu.find(e.b);
        if (a == b) continue;
        float ta = internal[a] + static_cast<float>(params.k) / dsu.size(a);
        float tb = internal[b] + static_cast<float>(params.k) / dsu.size(b);
        if (e.weight <= std::min(ta, tb)) {
            std::int32_t root = dsu.join(a, b);
            internal[root] = e.weight;
        }
    }

    // Absorb undersized components along the cheapest connecting edges.
    for (const GraphEdge& e : edges) {
        std::int32_t a = dsu.find(e.a), b = dsu.find(e.b);
        if (a == b) continue;
        if (dsu.size(a) < params.min_size || dsu.size(b) < params.min_size) dsu.join(a, b);
    }

    LabelMap out(w, h, 0);
    std::vector<std::int32_t> root_label(n, 0);
    std::int32_t next = 0;
    for (std::int32_t i = 0; i < n; ++i) {
        std::int32_t r = dsu.find(i);
        if (root_label[r] == 0) root_label[r] = ++next;
        out.labels[i] = root_label[r];
    }
    out.n_labels = next;
    return out;
}

RasterImage threshold_mask_apply(const RasterImage& img, const LabelMap& mask,
                                 std::int32_t target_label) {
    if (img.width != mask.width || img.height != mask.height || img.channels != 1)
        throw std::invalid_argument("threshold_mask_apply: dimension mismatch");
    RasterImage out(img.width, img.height, 1);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out.pixels[i] = mask.labels[i] == target_label ? img.pixels[i] : 0.0;
    return out;
}

RasterImage label_map_to_image(const LabelMap& map) {
    RasterImage out(map.width, map.height, 1);
    std::int32_t max_label = 0;
    for (auto l : map.labels) max_label = std::max(max_label, l);
    if (max_label == 0) return out;
    for (std::size_t i = 0; i < map.labels.size(); ++i)
        out.pixels[i] = static_cast<double>(map.labels[i]) / max_label;
    return out;
}

std::string label_map_to_csv(const LabelMap& map, const RasterImage& img) {
    if (img.width != map.width || img.height != map.height)
        throw std::invalid_argument("label_map_to_csv: dimension mismatch");
    std::int32_t max_label = 0;
    for (auto l : map.labels) max_label = std::max(max_label, l);
    std::vector<std::uint64_t> count(static_cast<std::size_t>(max_label) + 1, 0);
    std::vector<double> sum(static_cast<std::size_t>(max_label) + 1, 0.0);
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
        ++count[map.labels[i]];
        sum[map.labels[i]] += img.pixels[i * img.channels];
    }
    std::string csv = "label,pixel_count,mean_intensity\n";
    char line[96];
    for (std::int32_t l = 0; l <= max_label; ++l) {
        if (count[l] == 0) continue;
        std::snprintf(line, sizeof(line), "%d,%llu,%.10g\n", l,
                      static_cast<unsigned long long>(count[l]),
                      sum[l] / static_cast<double>(count[l]));
        csv += line;
    }
    return csv;
}

}  // namespace radiolith
