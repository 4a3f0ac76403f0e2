#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "radiolith/denoise.hpp"
#include "radiolith/segmentation.hpp"

using namespace radiolith;
using namespace test_helpers;

namespace {

// Textbook scan recomputing class weights and means from scratch per cut.
int brute_force_otsu(const Histogram& h) {
    const double W = static_cast<double>(h.total);
    double best = -1.0;
    int best_t = 0;
    for (int t = 0; t < 255; ++t) {
        double w0 = 0, s0 = 0, w1 = 0, s1 = 0;
        for (int i = 0; i <= t; ++i) {
            w0 += static_cast<double>(h.bins[i]);
            s0 += static_cast<double>(i) * static_cast<double>(h.bins[i]);
        }
        for (int i = t + 1; i < 256; ++i) {
            w1 += static_cast<double>(h.bins[i]);
            s1 += static_cast<double>(i) * static_cast<double>(h.bins[i]);
        }
        if (w0 == 0.0 || w1 == 0.0) continue;
        double mu0 = s0 / w0, mu1 = s1 / w1;
        double var = (w0 / W) * (w1 / W) * (mu0 - mu1) * (mu0 - mu1);
        if (var > best) {
            best = var;
            best_t = t;
        }
    }
    return best_t;
}

bool is_partition(const LabelMap& m) {
    if (m.n_labels < 1) return false;
    for (auto l : m.labels)
        if (l < 1 || l > m.n_labels) return false;
    return true;
}

// True when every label's pixels form one 4-connected component.
bool four_connected(const LabelMap& m) {
    std::vector<char> seen(m.labels.size(), 0);
    std::set<std::int32_t> done;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            std::int32_t l = m.at(x, y);
            if (seen[static_cast<std::size_t>(y) * m.width + x]) continue;
            if (done.count(l)) return false;  // second component of this label
            done.insert(l);
            std::vector<std::pair<int, int>> stack{{x, y}};
            seen[static_cast<std::size_t>(y) * m.width + x] = 1;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                constexpr int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                for (auto& d : nb) {
                    int nx = cx + d[0], ny = cy + d[1];
                    if (nx < 0 || nx >= m.width || ny < 0 || ny >= m.height) continue;
                    std::size_t idx = static_cast<std::size_t>(ny) * m.width + nx;
                    if (seen[idx] || m.at(nx, ny) != l) continue;
                    seen[idx] = 1;
                    stack.emplace_back(nx, ny);
                }
            }
        }
    return true;
}

}  // namespace

TEST_CASE("threshold: degenerate cut, exact separation, monotonicity") {
    RasterImage img = random_image_8bit(24, 18, 1);
    LabelMap all_low = threshold(img, 1.0);
    for (auto l : all_low.labels) CHECK(l == 1);

    RasterImage two(10, 10, 1);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) two.at(x, y) = (x + y) % 2 ? 0.2 : 0.8;
    LabelMap split = threshold(two, 0.5);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) CHECK(split.at(x, y) == ((x + y) % 2 ? 1 : 2));

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RasterImage r = random_image_8bit(32, 32, 100 + seed);
        LabelMap lo = threshold(r, 100.0 / 255.0);
        LabelMap hi = threshold(r, 150.0 / 255.0);
        for (std::size_t i = 0; i < lo.labels.size(); ++i)
            if (hi.labels[i] == 2) CHECK(lo.labels[i] == 2);
    }
}

TEST_CASE("otsu equals the brute-force maximizer on 1000 seeded histograms") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        Histogram h{};
        h.total = 0;
        // Mix dense, sparse and clustered shapes.
        int mode = trial % 3;
        for (int i = 0; i < 256; ++i) {
            std::uint64_t c = 0;
            if (mode == 0) c = rng() % 64;
            else if (mode == 1 && i % 7 == 0) c = rng() % 200;
            else if (mode == 2 && (i < 80 || i > 170)) c = rng() % 100;
            h.bins[i] = c;
            h.total += c;
        }
        int nonzero = 0;
        for (auto b : h.bins) nonzero += b > 0 ? 1 : 0;
        if (nonzero < 2) continue;
        OtsuResult r = otsu_from_histogram(h);
        CHECK(r.cut_bin == brute_force_otsu(h));
        CHECK(r.threshold == (r.cut_bin + 1) / 256.0);
    }
}

TEST_CASE("otsu on structured histograms") {
    // Spikes at 50 and 200: any cut between them separates identically and
    // the tie must resolve to the lowest bin.
    Histogram spikes{};
    spikes.bins[50] = 500;
    spikes.bins[200] = 500;
    spikes.total = 1000;
    OtsuResult r = otsu_from_histogram(spikes);
    CHECK(r.cut_bin == brute_force_otsu(spikes));
    CHECK(r.cut_bin == 50);
    CHECK(r.threshold > 50.0 / 255.0);
    CHECK(r.threshold < 200.0 / 255.0);

    // Uniform histogram: the class-weight product is the only varying factor
    // and peaks uniquely at the balanced split, the central bin boundary.
    Histogram uniform{};
    for (int i = 0; i < 256; ++i) uniform.bins[i] = 10;
    uniform.total = 2560;
    OtsuResult ru = otsu_from_histogram(uniform);
    CHECK(ru.cut_bin == 127);
    CHECK(ru.threshold == 0.5);
    CHECK(ru.cut_bin == brute_force_otsu(uniform));

    // Mirror symmetry: the variance at the chosen cut equals the variance at
    // the mirrored cut, and the lower of the pair is reported. For broad
    // mirrored humps the maximizing pair sits off-center.
    Histogram humps{};
    humps.total = 0;
    for (int i = 0; i < 256; ++i) {
        double d1 = (i - 64.0) / 18.0, d2 = (i - 191.0) / 18.0;
        humps.bins[i] = static_cast<std::uint64_t>(
            1000.0 * (std::exp(-d1 * d1) + std::exp(-d2 * d2)));
        humps.total += humps.bins[i];
    }
    OtsuResult rh = otsu_from_histogram(humps);
    CHECK(rh.cut_bin == brute_force_otsu(humps));
    CHECK(rh.cut_bin <= 127);  // the lower of the mirrored maximizer pair

    // Mirroring an asymmetric histogram mirrors the (unique) cut.
    Histogram skew{};
    std::mt19937_64 rng(9);
    skew.total = 0;
    for (int i = 0; i < 256; ++i) {
        skew.bins[i] = rng() % (i + 2);
        skew.total += skew.bins[i];
    }
    Histogram mirrored{};
    mirrored.total = skew.total;
    for (int i = 0; i < 256; ++i) mirrored.bins[i] = skew.bins[255 - i];
    CHECK(otsu_from_histogram(mirrored).cut_bin ==
          254 - otsu_from_histogram(skew).cut_bin);

    CHECK_THROWS(otsu(constant_image(8, 8, 0.5)));

    // Bimodal image: the threshold separates the two populations.
    RasterImage bimodal(16, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) bimodal.at(x, y) = y < 8 ? 50.0 / 255.0 : 200.0 / 255.0;
    LabelMap cut = threshold(bimodal, otsu(bimodal).threshold);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) CHECK(cut.at(x, y) == (y < 8 ? 1 : 2));
}

TEST_CASE("kmeans: degenerate k, exact bimodal split, determinism, inertia descent") {
    RasterImage img = random_image_8bit(32, 24, 3);
    KMeansResult one = kmeans_intensity(img, 1, 9);
    for (auto l : one.labels.labels) CHECK(l == 1);

    RasterImage two(20, 20, 1);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) two.at(x, y) = (x < 10) ? 0.15 : 0.85;
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 99ULL}) {
        KMeansResult r = kmeans_intensity(two, 2, seed);
        CHECK(is_partition(r.labels));
        for (int y = 0; y < 20; ++y)
            for (int x = 0; x < 20; ++x) CHECK(r.labels.at(x, y) == (x < 10 ? 1 : 2));
        CHECK(r.centroids[0] == doctest::Approx(0.15));
        CHECK(r.centroids[1] == doctest::Approx(0.85));
    }

    KMeansResult a = kmeans_intensity(img, 4, 7);
    KMeansResult b = kmeans_intensity(img, 4, 7);
    CHECK(a.labels.labels == b.labels.labels);
    CHECK(std::is_sorted(a.centroids.begin(), a.centroids.end()));
    for (std::size_t i = 1; i < a.inertia_history.size(); ++i)
        CHECK(a.inertia_history[i] <= a.inertia_history[i - 1] + 1e-12);

    RasterImage tiny(2, 1, 1);
    tiny.at(0, 0) = 0.3;
    tiny.at(1, 0) = 0.3;
    CHECK_THROWS(kmeans_intensity(tiny, 2, 0));  // only one distinct value
}

TEST_CASE("watershed: single marker, two basins, label retention, idempotence") {
    RasterImage grad(64, 64, 1);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) grad.at(x, y) = 1.0 - std::fabs(x - 32.0) / 32.0;

    LabelMap lone(64, 64, 0);
    lone.at(10, 10) = 1;
    LabelMap flooded = watershed(grad, lone);
    for (auto l : flooded.labels) CHECK(l == 1);

    LabelMap markers(64, 64, 0);
    markers.at(5, 32) = 1;
    markers.at(58, 32) = 2;
    LabelMap basins = watershed(grad, markers);
    CHECK(basins.at(5, 32) == 1);
    CHECK(basins.at(58, 32) == 2);
    std::set<std::int32_t> used(basins.labels.begin(), basins.labels.end());
    CHECK(used == std::set<std::int32_t>{1, 2});
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 31; ++x) CHECK(basins.at(x, y) == 1);
        for (int x = 34; x < 64; ++x) CHECK(basins.at(x, y) == 2);
    }

    LabelMap again = watershed(grad, basins);
    CHECK(again.labels == basins.labels);

    CHECK_THROWS(watershed(grad, LabelMap(64, 64, 0)));
}

TEST_CASE("auto markers from low-gradient components") {
    LabelMap single = auto_markers(constant_image(20, 20, 0.5), 10.0);
    CHECK(single.n_labels == 1);
    for (auto l : single.labels) CHECK(l == 1);

    // Two plateaus joined by a ramp: the flat regions become two markers.
    RasterImage plateaus(64, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 64; ++x) {
            double v = x < 24 ? 0.2 : (x > 40 ? 0.8 : 0.2 + 0.6 * (x - 24) / 16.0);
            plateaus.at(x, y) = v;
        }
    LabelMap two = auto_markers(plateaus, 30.0);
    CHECK(two.n_labels == 2);

    // Markers are disjoint nonempty components by construction.
    std::vector<int> counts(static_cast<std::size_t>(two.n_labels) + 1, 0);
    for (auto l : two.labels) {
        CHECK(l >= 0);
        CHECK(l <= two.n_labels);
        ++counts[l];
    }
    CHECK(counts[1] > 0);
    CHECK(counts[2] > 0);

    CHECK_THROWS(auto_markers(plateaus, 0.0));
    CHECK_THROWS(auto_markers(plateaus, 100.0));
}

TEST_CASE("slic: grid tiles on constant input, connectivity, label bounds") {
    SlicParams p;
    p.n_segments = 16;
    LabelMap tiles = slic(constant_image(64, 64, 0.5), p);
    CHECK(tiles.n_labels == 16);
    CHECK(is_partition(tiles));
    CHECK(four_connected(tiles));
    // Every seed keeps its grid cell: near-square tiles around each seed
    // (boundary columns may drift a pixel where spatial distances tie).
    std::vector<int> sizes(17, 0);
    for (auto l : tiles.labels) ++sizes[l];
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
            std::int32_t seed_label = tiles.at(16 * i + 8, 16 * j + 8);
            CHECK(seed_label == j * 4 + i + 1);
            CHECK(sizes[seed_label] > 200);
            CHECK(sizes[seed_label] < 320);
        }

    for (std::uint64_t seed : {5ULL, 6ULL, 7ULL}) {
        RasterImage img = gaussian_blur(random_image(80, 60, seed), 2.0);
        SlicParams q;
        q.n_segments = 40;
        q.compactness = 10.0;
        LabelMap m = slic(img, q);
        CHECK(is_partition(m));
        CHECK(four_connected(m));
        CHECK(m.n_labels >= 1);
        CHECK(m.n_labels <= 2 * q.n_segments);
    }
    CHECK_THROWS(slic(constant_image(4, 4, 0.1), {.n_segments = 100}));
}

TEST_CASE("felzenszwalb: constants merge, steps split, min_size enforced") {
    FelzenszwalbParams p{0.5, 0.0, 1};
    LabelMap uni = felzenszwalb(constant_image(32, 32, 0.3), p);
    CHECK(uni.n_labels == 1);

    RasterImage halves = step_image(40, 20, 20, 0.1, 0.9);
    FelzenszwalbParams q{0.01, 0.0, 5};
    LabelMap two = felzenszwalb(halves, q);
    CHECK(two.n_labels == 2);
    CHECK(two.at(0, 0) != two.at(39, 0));
    CHECK(is_partition(two));

    for (std::uint64_t seed : {21ULL, 22ULL}) {
        RasterImage img = random_image(48, 48, seed);
        FelzenszwalbParams r{0.05, 0.8, 30};
        LabelMap m = felzenszwalb(img, r);
        CHECK(is_partition(m));
        std::vector<int> counts(static_cast<std::size_t>(m.n_labels) + 1, 0);
        for (auto l : m.labels) ++counts[l];
        for (int l = 1; l <= m.n_labels; ++l) CHECK(counts[l] >= 30);
    }
    CHECK_THROWS(felzenszwalb(halves, FelzenszwalbParams{0.0, 0.8, 10}));
}

TEST_CASE("felzenszwalb segment count is non-increasing in k on the fixture set") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RasterImage img = gaussian_blur(random_image(48, 48, 400 + seed), 1.5);
        int prev = std::numeric_limits<int>::max();
        for (double k : {0.002, 0.005, 0.01, 0.02, 0.05, 0.1}) {
            LabelMap m = felzenszwalb(img, FelzenszwalbParams{k, 0.0, 1});
            CHECK(m.n_labels <= prev);
            prev = m.n_labels;
        }
    }
}

TEST_CASE("mask application keeps only the targeted label") {
    RasterImage img = random_image_8bit(16, 12, 5);
    LabelMap mask = threshold(img, 0.5);
    RasterImage kept = threshold_mask_apply(img, mask, 2);
    std::size_t nonzero = 0, expected = 0;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        if (mask.labels[i] == 2) {
            ++expected;
            CHECK(kept.pixels[i] == img.pixels[i]);
        } else {
            CHECK(kept.pixels[i] == 0.0);
        }
        nonzero += kept.pixels[i] != 0.0 ? 1 : 0;
    }
    CHECK(nonzero <= expected);  // zero-valued kept pixels are allowed

    LabelMap all_two(16, 12, 2);
    all_two.n_labels = 2;
    CHECK(threshold_mask_apply(img, all_two, 2).pixels == img.pixels);
    LabelMap none(16, 12, 1);
    none.n_labels = 1;
    for (double v : threshold_mask_apply(img, none, 2).pixels) CHECK(v == 0.0);

    CHECK_THROWS(threshold_mask_apply(img, LabelMap(4, 4, 1), 1));
}

TEST_CASE("label map serialization") {
    LabelMap m(4, 2, 1);
    m.at(2, 0) = m.at(3, 0) = m.at(2, 1) = m.at(3, 1) = 2;
    m.n_labels = 2;
    RasterImage viz = label_map_to_image(m);
    CHECK(viz.at(0, 0) == 0.5);
    CHECK(viz.at(3, 1) == 1.0);

    RasterImage img(4, 2, 1);
    for (int x = 0; x < 4; ++x) {
        img.at(x, 0) = x < 2 ? 0.2 : 0.6;
        img.at(x, 1) = x < 2 ? 0.4 : 0.8;
    }
    std::string csv = label_map_to_csv(m, img);
    CHECK(csv ==
          "label,pixel_count,mean_intensity\n"
          "1,4,0.3\n"
          "2,4,0.7\n");
}
