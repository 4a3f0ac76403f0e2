#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "radiolith/image_io.hpp"
#include "radiolith/morphology.hpp"
#include "radiolith/overlay.hpp"
#include "radiolith/pipeline.hpp"
#include "radiolith/sha256.hpp"
#include "radiolith/util.hpp"

using namespace radiolith;
using namespace test_helpers;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("radiolith_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

RasterImage quadrant_phantom(int n) {
    RasterImage img(n, n, 1);
    const double levels[4] = {51.0 / 255.0, 102.0 / 255.0, 153.0 / 255.0, 204.0 / 255.0};
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            img.at(x, y) = levels[(y >= n / 2) * 2 + (x >= n / 2)];
    return img;
}

}  // namespace

TEST_CASE("sha256 matches the published test vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex(std::string(1000, 'x')).size() == 64);
}

TEST_CASE("pipeline parsing accepts the documented schema") {
    PipelineSpec empty = parse_pipeline_text(R"({"version":1,"stages":[]})");
    CHECK(empty.stages.empty());
    CHECK(empty.seed == 0);
    CHECK(!empty.source_sha256.empty());

    PipelineSpec spec = parse_pipeline_text(R"({
        "version": 1,
        "global": {"seed": 7, "border_policy": "reflect"},
        "stages": [
            {"op": "median_blur", "params": {"radius": 5}},
            {"op": "threshold", "params": {"t": 100}, "save_as": "mask"}
        ]
    })");
    CHECK(spec.seed == 7);
    REQUIRE(spec.stages.size() == 2);
    CHECK(spec.stages[0].op == "median_blur");
    CHECK(spec.stages[0].params.at("radius") == 5);
    CHECK(spec.stages[1].save_as == "mask");
}

TEST_CASE("pipeline parsing rejects malformed input with the stage index") {
    auto throws_with = [](const std::string& text, const std::string& needle) {
        try {
            parse_pipeline_text(text);
            FAIL_CHECK("expected rejection: " << text);
        } catch (const std::exception& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    throws_with(R"({"version":2,"stages":[]})", "version");
    throws_with(R"({"version":1})", "stages");
    throws_with(R"({"version":1,"stages":[],"extra":1})", "unknown key");
    throws_with(R"({"version":1,"stages":[{"op":"frobnicate"}]})", "stage 0");
    throws_with(R"({"version":1,"stages":[{"op":"frobnicate"}]})", "unknown operation");
    throws_with(R"({"version":1,"stages":[{"op":"median_blur"}]})", "radius");
    throws_with(
        R"({"version":1,"stages":[{"op":"median_blur","params":{"radius":5,"bogus":1}}]})",
        "unknown parameter");
    throws_with(R"({"version":1,"stages":[{"op":"median_blur","params":{"radius":0}}]})",
                "out of range");
    throws_with(R"({"version":1,"stages":[{"op":"median_blur","params":{"radius":2.5}}]})",
                "integer");
    throws_with(R"({"version":1,"stages":[{"op":"flip","params":{"axis":"diagonal"}}]})",
                "choice");
    throws_with(
        R"({"version":1,"stages":[{"op":"canny","params":{"low":0.4,"high":0.1}}]})",
        "low <= high");
    throws_with(R"({"version":1,"stages":[{"op":"dilate","params":{"size":4}}]})", "odd");
    throws_with(R"({"version":1,"stages":[{"op":"mask_apply"}]})", "label-producing");
    throws_with(R"({"version":1,"stages":[{"op":"overlay","params":{"kind":"blobs"}}]})",
                "producing stage");
    throws_with(
        R"({"version":1,"stages":[{"op":"image_diff","params":{"with":"nope"}}]})",
        "unknown image");
    throws_with(R"({"version":1,"stages":[{"op":"blobs_log","params":{"t_min":9,"t_max":3}}]})",
                "t_min < t_max");
    throws_with(R"({"version":1,"stages":[
        {"op":"gaussian_blur","params":{"sigma":1},"save_as":"a"},
        {"op":"mean_blur","params":{"radius":1},"save_as":"a"}]})",
                "duplicate");
    throws_with(R"({"version":1,"stages":[{"op":"otsu","save_as":"final"}]})", "save_as");
    throws_with("{nonsense", "pipeline");
}

TEST_CASE("validated parameters carry defaults") {
    const OpSpec& op = op_registry().at("bilateral");
    json p = validate_params(op, json::object(), 0);
    CHECK(p.at("sigma_s") == 2.0);
    CHECK(p.at("sigma_r") == 0.1);
    CHECK(p.at("radius") == 3);
}

TEST_CASE("empty pipeline copies the input through quantization") {
    fs::path dir = fresh_dir("empty");
    RasterImage img = random_image(24, 18, 3);
    fs::path input = dir / "input.pgm";
    save_image(img, input.string());

    PipelineSpec spec = parse_pipeline_text(R"({"version":1,"stages":[]})");
    RunReport report = run_pipeline(spec, input.string(), (dir / "out").string());
    CHECK(!report.failed);
    CHECK(report.stages.empty());
    CHECK(report.pipeline_sha256 == spec.source_sha256);

    RasterImage final_img = load_image((dir / "out" / "final.pgm").string());
    RasterImage original = load_image(input.string());
    CHECK(final_img.pixels == original.pixels);
    CHECK(fs::exists(dir / "out" / "report.json"));
}

TEST_CASE("noise plus median pipeline restores the phantom") {
    fs::path dir = fresh_dir("restore");
    RasterImage clean = quadrant_phantom(256);
    fs::path input = dir / "phantom.pgm";
    save_image(clean, input.string());

    PipelineSpec spec = parse_pipeline_text(R"({
        "version": 1,
        "global": {"seed": 7},
        "stages": [
            {"op": "add_salt_pepper", "params": {"p": 0.05}, "save_as": "noisy"},
            {"op": "median_blur", "params": {"radius": 1}}
        ]
    })");
    RunReport report = run_pipeline(spec, input.string(), (dir / "out").string());
    CHECK(!report.failed);
    REQUIRE(report.stages.size() == 2);
    CHECK(report.stages[0].op == "add_salt_pepper");
    CHECK(report.stages[0].outputs == std::vector<std::string>{"noisy.pgm"});

    RasterImage restored = load_image((dir / "out" / "final.pgm").string());
    std::size_t good = 0;
    for (std::size_t i = 0; i < clean.pixels.size(); ++i)
        if (std::fabs(restored.pixels[i] - clean.pixels[i]) <= 1.0 / 255.0 + 1e-12) ++good;
    CHECK(static_cast<double>(good) / static_cast<double>(clean.pixels.size()) >= 0.99);

    json rj = json::parse(slurp(dir / "out" / "report.json"));
    CHECK(rj.at("stages").size() == 2);
    CHECK(rj.at("stages").at(0).at("op") == "add_salt_pepper");
    CHECK(rj.at("stages").at(1).at("op") == "median_blur");
    CHECK(rj.at("seed") == 7);
    CHECK(rj.at("rng_algorithm") == kRngAlgorithm);
}

TEST_CASE("identical runs are byte-identical regardless of thread count") {
    fs::path dir = fresh_dir("determinism");
    RasterImage img = gaussian_blob_image(96, 96, 48, 48, 6.0, 0.85, -0.6);
    fs::path input = dir / "input.pgm";
    save_image(img, input.string());

    const char* text = R"({
        "version": 1,
        "global": {"seed": 11},
        "stages": [
            {"op": "add_salt_pepper", "params": {"p": 0.02}},
            {"op": "median_blur", "params": {"radius": 1}},
            {"op": "gaussian_blur", "params": {"sigma": 1.2}, "save_as": "smooth"},
            {"op": "blobs_log", "params": {"t_min": 4, "t_max": 80, "n_scales": 20,
                                           "threshold": 0.05}, "save_as": "blobs"},
            {"op": "overlay", "params": {"kind": "blobs"}, "save_as": "view"},
            {"op": "to_gray"},
            {"op": "threshold_otsu", "save_as": "otsu_mask"},
            {"op": "mask_apply", "params": {"target_label": 2}}
        ]
    })";
    PipelineSpec spec = parse_pipeline_text(text);

    set_thread_count(1);
    RunReport r1 = run_pipeline(spec, input.string(), (dir / "a").string());
    set_thread_count(8);
    RunReport r2 = run_pipeline(spec, input.string(), (dir / "b").string());
    set_thread_count(1);
    CHECK(!r1.failed);
    CHECK(!r2.failed);

    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        fs::path name = entry.path().filename();
        if (name == "report.json") continue;
        CHECK(slurp(entry.path()) == slurp(dir / "b" / name));
        ++compared;
    }
    CHECK(compared == 6);  // smooth, blobs.csv, view, otsu_mask pgm+csv, final

    // Reports agree once the wall-clock fields are zeroed.
    json ja = r1.to_json(), jb = r2.to_json();
    for (auto& s : ja.at("stages")) s["ms"] = 0.0;
    for (auto& s : jb.at("stages")) s["ms"] = 0.0;
    CHECK(ja == jb);
}

TEST_CASE("stage failure aborts with a flagged partial report") {
    fs::path dir = fresh_dir("failure");
    RasterImage img = random_image(16, 16, 1);
    fs::path input = dir / "input.pgm";
    save_image(img, input.string());

    // Crop is validated against data at runtime, so an oversized window is a
    // data error, not a parse error.
    PipelineSpec spec = parse_pipeline_text(R"({
        "version": 1,
        "stages": [
            {"op": "gaussian_blur", "params": {"sigma": 1.0}},
            {"op": "crop", "params": {"x0": 0, "y0": 0, "w": 9999, "h": 4}}
        ]
    })");
    RunReport report = run_pipeline(spec, input.string(), (dir / "out").string());
    CHECK(report.failed);
    CHECK(report.error.find("stage 1") != std::string::npos);
    json rj = json::parse(slurp(dir / "out" / "report.json"));
    CHECK(rj.at("failed") == true);
}

TEST_CASE("label and image artifacts are written per save_as") {
    fs::path dir = fresh_dir("artifacts");
    RasterImage img = random_image_8bit(32, 32, 9);
    fs::path input = dir / "input.pgm";
    save_image(img, input.string());

    PipelineSpec spec = parse_pipeline_text(R"({
        "version": 1,
        "stages": [
            {"op": "dilate", "params": {"shape": "square", "size": 3}, "save_as": "grown"},
            {"op": "image_diff", "params": {"with": "input"}},
            {"op": "kmeans", "params": {"k": 2, "seed": 5}, "save_as": "clusters"},
            {"op": "histogram", "save_as": "hist"}
        ]
    })");
    RunReport report = run_pipeline(spec, input.string(), (dir / "out").string());
    CHECK(!report.failed);
    CHECK(fs::exists(dir / "out" / "grown.pgm"));
    CHECK(fs::exists(dir / "out" / "clusters.pgm"));
    CHECK(fs::exists(dir / "out" / "clusters.csv"));
    CHECK(fs::exists(dir / "out" / "hist.csv"));
    CHECK(fs::exists(dir / "out" / "final.pgm"));

    std::string csv = slurp(dir / "out" / "clusters.csv");
    CHECK(csv.rfind("label,pixel_count,mean_intensity\n", 0) == 0);

    // image_diff consumed the original input; the final image is |dilated - input|.
    RasterImage grown = load_image((dir / "out" / "grown.pgm").string());
    CHECK(report.stages[1].stats.at("max").get<double>() <= 1.0);
}

TEST_CASE("dilation difference workflow runs end to end") {
    fs::path dir = fresh_dir("dilate_diff");
    RasterImage img = random_image_8bit(48, 48, 77);
    fs::path input = dir / "input.pgm";
    save_image(img, input.string());

    // Grow the bright structures, then visualize what dilation added.
    PipelineSpec spec = parse_pipeline_text(R"({
        "version": 1,
        "stages": [
            {"op": "dilate", "params": {"shape": "disk", "size": 2}},
            {"op": "image_diff", "params": {"with": "input"}, "save_as": "gain"}
        ]
    })");
    RunReport report = run_pipeline(spec, input.string(), (dir / "out").string());
    CHECK(!report.failed);

    RasterImage gain = load_image((dir / "out" / "gain.pgm").string());
    RasterImage expected = image_diff(dilate(img, StructuringElement::disk(2)), img);
    for (std::size_t i = 0; i < gain.pixels.size(); ++i)
        CHECK(gain.pixels[i] == quantize_u8(expected.pixels[i]) / 255.0);
}

TEST_CASE("overlays highlight the expected pixels") {
    RasterImage gray = constant_image(32, 32, 0.5);

    EdgeMap empty_edges;
    empty_edges.width = 32;
    empty_edges.height = 32;
    empty_edges.mask.assign(32 * 32, 0);
    RasterImage promoted = overlay_edges(gray, empty_edges);
    CHECK(promoted.channels == 3);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            for (int c = 0; c < 3; ++c) CHECK(promoted.at(x, y, c) == 0.5);

    std::vector<Blob> blobs{{10.0, 10.0, 4.5, 3.0, 0.5, BlobPolarity::dark}};
    RasterImage ring = overlay_blobs(gray, blobs);
    OverlayColor color;
    for (auto [dx, dy] : {std::pair{3, 0}, {-3, 0}, {0, 3}, {0, -3}}) {
        CHECK(ring.at(10 + dx, 10 + dy, 0) == color.r);
        CHECK(ring.at(10 + dx, 10 + dy, 1) == color.g);
    }
    CHECK(ring.at(10, 10, 0) == 0.5);  // center untouched

    LabelMap labels(32, 32, 1);
    for (int y = 0; y < 32; ++y)
        for (int x = 16; x < 32; ++x) labels.at(x, y) = 2;
    labels.n_labels = 2;
    RasterImage bounded = overlay_labels(gray, labels);
    CHECK(bounded.at(15, 7, 0) == color.r);  // 4-neighbor differs
    CHECK(bounded.at(16, 7, 0) == color.r);
    CHECK(bounded.at(3, 7, 0) == 0.5);
}

TEST_CASE("full-stack pipeline across every op family") {
    fs::path dir = fresh_dir("fullstack");
    // Synthetic radiograph-ish scene: bright roots on a dark mount with noise.
    RasterImage img(96, 96, 1, 0.15);
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) {
            double d1 = std::hypot(x - 30.0, (y - 50.0) * 0.6);
            double d2 = std::hypot(x - 66.0, (y - 46.0) * 0.55);
            img.at(x, y) += 0.65 * std::exp(-d1 * d1 / 180.0) + 0.6 * std::exp(-d2 * d2 / 150.0);
            if (img.at(x, y) > 1.0) img.at(x, y) = 1.0;
        }
    fs::path input = dir / "scene.pgm";
    save_image(img, input.string());

    PipelineSpec spec = parse_pipeline_text(R"({
        "version": 1,
        "global": {"seed": 3},
        "stages": [
            {"op": "add_salt_pepper", "params": {"p": 0.02}},
            {"op": "median_blur", "params": {"radius": 1}},
            {"op": "bilateral", "params": {"sigma_s": 2.0, "sigma_r": 0.15, "radius": 3}},
            {"op": "close", "params": {"shape": "disk", "size": 1}},
            {"op": "centroid"},
            {"op": "histogram", "save_as": "hist"},
            {"op": "hog", "params": {"cell": 8}, "save_as": "descriptor"},
            {"op": "blobs_log", "params": {"t_min": 6, "t_max": 120, "n_scales": 18,
                                           "threshold": 0.03}, "save_as": "blobs"},
            {"op": "gabor", "params": {"sigma": 2.0, "wavelength": 7.0, "orientations": 4}},
            {"op": "normalize"},
            {"op": "threshold_otsu", "save_as": "segmented"},
            {"op": "mask_apply"},
            {"op": "slic", "params": {"n_segments": 30}, "save_as": "superpixels"},
            {"op": "felzenszwalb", "params": {"k": 0.1, "sigma": 0.8, "min_size": 16},
             "save_as": "regions"},
            {"op": "watershed", "params": {"gradient": "sobel", "percentile": 15},
             "save_as": "basins"},
            {"op": "overlay", "params": {"kind": "labels"}}
        ]
    })");
    RunReport report = run_pipeline(spec, input.string(), (dir / "out").string());
    CHECK(!report.failed);
    CHECK(report.stages.size() == 16);
    CHECK(fs::exists(dir / "out" / "final.pgm"));
    CHECK(fs::exists(dir / "out" / "final.ppm"));  // overlay output is RGB
    CHECK(fs::exists(dir / "out" / "descriptor.csv"));
    CHECK(fs::exists(dir / "out" / "superpixels.csv"));
    CHECK(report.stages[4].stats.contains("cx"));
    CHECK(report.stages[7].stats.at("blob_count").get<int>() >= 1);
    CHECK(report.stages[14].stats.at("label_count").get<int>() >= 1);
}

TEST_CASE("registry schema summary stays consistent") {
    for (const auto& [name, op] : op_registry()) {
        CHECK(name == op.name);
        CHECK(static_cast<bool>(op.run));
        json defaults = json::object();
        bool all_defaulted = true;
        for (const ParamSpec& ps : op.params)
            if (ps.required) all_defaulted = false;
        if (all_defaulted) CHECK_NOTHROW(validate_params(op, json::object(), 0));
    }
}
