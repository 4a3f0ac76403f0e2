#include "radiolith/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "radiolith/denoise.hpp"
#include "radiolith/hog.hpp"
#include "radiolith/image_io.hpp"
#include "radiolith/morphology.hpp"
#include "radiolith/overlay.hpp"
#include "radiolith/sha256.hpp"
#include "radiolith/util.hpp"

namespace radiolith {

using nlohmann::json;

namespace {

std::string stage_prefix(int stage_index) {
    return stage_index >= 0 ? "stage " + std::to_string(stage_index) + ": " : "";
}

[[noreturn]] void fail(int stage_index, const std::string& msg) {
    throw std::invalid_argument(stage_prefix(stage_index) + msg);
}

ParamSpec integer(const std::string& name, bool required, json def, double lo, double hi) {
    return {name, ParamSpec::Type::integer, required, std::move(def), lo, hi, {}};
}
ParamSpec real(const std::string& name, bool required, json def, double lo, double hi) {
    return {name, ParamSpec::Type::real, required, std::move(def), lo, hi, {}};
}
ParamSpec boolean(const std::string& name, json def) {
    return {name, ParamSpec::Type::boolean, false, std::move(def), 0, 0, {}};
}
ParamSpec choice(const std::string& name, bool required, json def,
                 std::vector<std::string> values) {
    return {name, ParamSpec::Type::choice, required, std::move(def), 0, 0, std::move(values)};
}
ParamSpec text(const std::string& name, bool required, json def) {
    return {name, ParamSpec::Type::text, required, std::move(def), 0, 0, {}};
}

StructuringElement se_from_params(const json& p) {
    int size = p.at("size").get<int>();
    return p.at("shape").get<std::string>() == "disk" ? StructuringElement::disk(size)
                                                      : StructuringElement::square(size);
}

void check_square_odd(const json& p, int stage) {
    if (p.at("shape").get<std::string>() == "square" && p.at("size").get<int>() % 2 == 0)
        fail(stage, "square structuring element size must be odd");
}

std::uint64_t resolve_seed(const OpContext& ctx, const json& p) {
    long long s = p.at("seed").get<long long>();
    return s < 0 ? ctx.seed : static_cast<std::uint64_t>(s);
}

GradientOperator gradient_op_from_name(const std::string& name) {
    if (name == "sobel") return GradientOperator::sobel;
    if (name == "prewitt") return GradientOperator::prewitt;
    if (name == "scharr") return GradientOperator::scharr;
    return GradientOperator::roberts;
}

void record_labels(OpContext& ctx, LabelMap labels) {
    ctx.stage_stats["label_count"] = labels.n_labels;
    ctx.labels = std::move(labels);
}

BlobDetectParams blob_params(const json& p) {
    BlobDetectParams bp;
    bp.t_min = p.at("t_min").get<double>();
    bp.t_max = p.at("t_max").get<double>();
    bp.n_scales = p.at("n_scales").get<int>();
    bp.threshold = p.at("threshold").get<double>();
    bp.include_border = p.at("include_border").get<bool>();
    return bp;
}

KernelEdgeParams kernel_edge_params(const json& p, KernelFamily family, BorderPolicy border) {
    KernelEdgeParams kp;
    kp.family = family;
    kp.theta = p.at("theta").get<double>();
    kp.n_orientations = p.at("orientations").get<int>();
    kp.radius = p.at("radius").get<int>();
    kp.border = border;
    if (family == KernelFamily::gabor) {
        kp.sigma = p.at("sigma").get<double>();
        kp.wavelength = p.at("wavelength").get<double>();
    } else if (family == KernelFamily::lmak) {
        kp.gamma = p.at("gamma").get<double>();
        kp.steepness = p.at("steepness").get<double>();
    } else {
        kp.f_gauss = p.at("f_gauss").get<double>();
        kp.f_lorentz = p.at("f_lorentz").get<double>();
        kp.steepness = p.at("steepness").get<double>();
    }
    return kp;
}

std::map<std::string, OpSpec> build_registry() {
    std::map<std::string, OpSpec> ops;
    auto add = [&](OpSpec op) { ops[op.name] = std::move(op); };

    add({.name = "flip",
         .params = {choice("axis", true, {}, {"horizontal", "vertical"})},
         .run = [](OpContext& ctx, const json& p) {
             ctx.image = flip(ctx.image, p.at("axis") == "horizontal" ? FlipAxis::horizontal
                                                                      : FlipAxis::vertical);
         }});

    add({.name = "rotate",
         .params = {real("angle", true, {}, -36000, 36000), boolean("reshape", false)},
         .run = [](OpContext& ctx, const json& p) {
             ctx.image = rotate(ctx.image, p.at("angle").get<double>(), p.at("reshape").get<bool>());
         }});

    add({.name = "rescale",
         .params = {real("factor", true, {}, 1e-6, 1e6),
                    choice("method", false, "bilinear", {"nearest", "bilinear"})},
         .run = [](OpContext& ctx, const json& p) {
             ctx.image = rescale(ctx.image, p.at("factor").get<double>(),
                                 p.at("method") == "nearest" ? Interp::nearest : Interp::bilinear);
         }});

    add({.name = "crop",
         .params = {integer("x0", true, {}, 0, 1e9), integer("y0", true, {}, 0, 1e9),
                    integer("w", true, {}, 1, 1e9), integer("h", true, {}, 1, 1e9)},
         .run = [](OpContext& ctx, const json& p) {
             ctx.image = crop(ctx.image, p.at("x0").get<int>(), p.at("y0").get<int>(),
                              p.at("w").get<int>(), p.at("h").get<int>());
         }});

    add({.name = "to_gray",
         .run = [](OpContext& ctx, const json&) { ctx.image = to_gray(ctx.image); }});

    add({.name = "value_channel",
         .run = [](OpContext& ctx, const json&) { ctx.image = value_channel(ctx.image); }});

    add({.name = "normalize",
         .run = [](OpContext& ctx, const json&) {
             double lo = 1e300, hi = -1e300;
             for (double v : ctx.image.pixels) {
                 lo = std::min(lo, v);
                 hi = std::max(hi, v);
             }
             for (double& v : ctx.image.pixels) v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
         }});

    add({.name = "centroid",
         .run = [](OpContext& ctx, const json&) {
             Centroid c = centroid(ctx.image);
             ctx.stage_stats["cx"] = c.cx;
             ctx.stage_stats["cy"] = c.cy;
         }});

    add({.name = "histogram",
         .run = [](OpContext& ctx, const json&) {
             Histogram h = histogram(ctx.image);
             json bins = json::array();
             for (auto b : h.bins) bins.push_back(b);
             ctx.stage_stats["histogram"] = std::move(bins);
         }});

    add({.name = "gaussian_blur",
         .params = {real("sigma", true, {}, 1e-9, 1e4)},
         .run = [](OpContext& ctx, const json& p) {
             ctx.image = gaussian_blur(ctx.image, p.at("sigma").get<double>());
         }});

    add({.name = "median_blur",
         .params = {integer("radius", true, {}, 1, 4096)},
         .run = [](OpContext& ctx, const json& p) {
             ctx.image = median_blur(ctx.image, p.at("radius").get<int>());
         }});

    add({.name = "mean_blur",
         .params = {integer("radius", true, {}, 1, 4096)},
         .run = [](OpContext& ctx, const json& p) {
             ctx.image = mean_blur(ctx.image, p.at("radius").get<int>());
         }});

    add({.name = "bilateral",
         .params = {real("sigma_s", false, 2.0, 1e-9, 1e4), real("sigma_r", false, 0.1, 1e-9, 1e4),
                    integer("radius", false, 3, 1, 256)},
         .run = [](OpContext& ctx, const json& p) {
             BilateralParams bp{p.at("sigma_s").get<double>(), p.at("sigma_r").get<double>(),
                                p.at("radius").get<int>()};
             ctx.image = bilateral(ctx.image, bp);
         }});

    add({.name = "add_salt_pepper",
         .params = {real("p", true, {}, 0.0, 1.0), integer("seed", false, -1, -1, 9.2e18)},
         .run = [](OpContext& ctx, const json& p) {
             NoiseSpec spec{p.at("p").get<double>(), resolve_seed(ctx, p)};
             ctx.stage_stats["noise_seed"] = spec.seed;
             ctx.image = add_salt_pepper(ctx.image, spec);
         }});

    for (const char* name : {"dilate", "erode", "open", "close", "morph_gradient"}) {
        OpSpec op;
        op.name = name;
        op.params = {choice("shape", false, "square", {"square", "disk"}),
                     integer("size", false, 3, 1, 512)};
        op.extra_check = check_square_odd;
        std::string n = name;
        op.run = [n](OpContext& ctx, const json& p) {
            StructuringElement se = se_from_params(p);
            if (n == "dilate") ctx.image = dilate(ctx.image, se);
            else if (n == "erode") ctx.image = erode(ctx.image, se);
            else if (n == "open") ctx.image = open(ctx.image, se);
            else if (n == "close") ctx.image = close(ctx.image, se);
            else ctx.image = morph_gradient(ctx.image, se);
        };
        add(std::move(op));
    }

    add({.name = "image_diff",
         .params = {text("with", false, "input")},
         .run = [](OpContext& ctx, const json& p) {
             std::string ref = p.at("with").get<std::string>();
             const RasterImage& other =
                 ref == "input" ? ctx.original : ctx.saved_images.at(ref);
             ctx.image = image_diff(ctx.image, other);
         }});

    for (const char* name : {"sobel", "prewitt", "scharr", "roberts"}) {
        OpSpec op;
        op.name = name;
        std::string n = name;
        op.run = [n](OpContext& ctx, const json&) {
            ctx.image = gradient(ctx.image, gradient_op_from_name(n)).magnitude;
         };
        add(std::move(op));
    }

    for (const char* name : {"scharr_prewitt", "scharr_sobel"}) {
        OpSpec op;
        op.name = name;
        std::string n = name;
        op.run = [n](OpContext& ctx, const json&) {
            ctx.image = hybrid_gradient(ctx.image, n == "scharr_prewitt"
                                                       ? HybridKind::scharr_prewitt
                                                       : HybridKind::scharr_sobel)
                            .magnitude;
        };
        add(std::move(op));
    }

    add({.name = "gabor",
         .params = {real("sigma", false, 2.0, 1e-9, 1e3), real("wavelength", false, 8.0, 1e-9, 1e4),
                    real("theta", false, 0.0, -10, 10), integer("orientations", false, 1, 1, 64),
                    integer("radius", false, 0, 0, 256)},
         .run = [](OpContext& ctx, const json& p) {
             ctx.image =
                 kernel_edge_response(ctx.image, kernel_edge_params(p, KernelFamily::gabor, ctx.border));
         }});

    add({.name = "lmak",
         .params = {real("gamma", false, 2.0, 1e-9, 1e3), real("theta", false, 0.0, -10, 10),
                    real("steepness", false, 1.0, 1e-9, 1e3),
                    integer("orientations", false, 1, 1, 64), integer("radius", false, 0, 0, 256)},
         .run = [](OpContext& ctx, const json& p) {
             ctx.image =
                 kernel_edge_response(ctx.image, kernel_edge_params(p, KernelFamily::lmak, ctx.border));
         }});

    add({.name = "pvmak",
         .params = {real("f_gauss", false, 4.0, 0.0, 1e3), real("f_lorentz", false, 4.0, 0.0, 1e3),
                    real("theta", false, 0.0, -10, 10), real("steepness", false, 1.0, 1e-9, 1e3),
                    integer("orientations", false, 1, 1, 64), integer("radius", false, 0, 0, 256)},
         .extra_check =
             [](const json& p, int stage) {
                 if (p.at("f_gauss").get<double>() <= 0.0 && p.at("f_lorentz").get<double>() <= 0.0)
                     fail(stage, "pvmak needs f_gauss + f_lorentz > 0");
             },
         .run = [](OpContext& ctx, const json& p) {
             ctx.image =
                 kernel_edge_response(ctx.image, kernel_edge_params(p, KernelFamily::pvmak, ctx.border));
         }});

    add({.name = "canny",
         .params = {real("sigma", false, 1.4, 0.0, 1e3), real("low", true, {}, 0.0, 1e6),
                    real("high", true, {}, 0.0, 1e6)},
         .makes_edges = true,
         .extra_check =
             [](const json& p, int stage) {
                 if (p.at("low").get<double>() > p.at("high").get<double>())
                     fail(stage, "canny needs low <= high");
             },
         .run = [](OpContext& ctx, const json& p) {
             EdgeMap e = canny(ctx.image, p.at("sigma").get<double>(), p.at("low").get<double>(),
                               p.at("high").get<double>());
             ctx.stage_stats["edge_count"] = e.edge_count();
             ctx.image = e.to_image();
             ctx.edges = std::move(e);
         }});

    add({.name = "canny_otsu",
         .params = {real("sigma", false, 1.4, 0.0, 1e3)},
         .makes_edges = true,
         .run = [](OpContext& ctx, const json& p) {
             EdgeMap e = canny_otsu(ctx.image, p.at("sigma").get<double>());
             ctx.stage_stats["edge_count"] = e.edge_count();
             ctx.stage_stats["low"] = e.low;
             ctx.stage_stats["high"] = e.high;
             ctx.image = e.to_image();
             ctx.edges = std::move(e);
         }});

    add({.name = "threshold",
         .params = {real("t", true, {}, 0.0, 255.0)},
         .makes_labels = true,
         .run = [](OpContext& ctx, const json& p) {
             // Pipeline thresholds use the 0-255 convention.
             record_labels(ctx, threshold(ctx.image, p.at("t").get<double>() / 255.0));
         }});

    add({.name = "otsu",
         .makes_labels = false,
         .run = [](OpContext& ctx, const json&) {
             OtsuResult r = otsu(ctx.image);
             ctx.stage_stats["threshold"] = r.threshold;
             ctx.stage_stats["threshold_8bit"] = static_cast<int>(std::lround(r.threshold * 255.0));
             ctx.stage_stats["between_class_variance"] = r.between_class_variance;
         }});

    add({.name = "threshold_otsu",
         .makes_labels = true,
         .run = [](OpContext& ctx, const json&) {
             OtsuResult r = otsu(ctx.image);
             ctx.stage_stats["threshold"] = r.threshold;
             record_labels(ctx, threshold(ctx.image, r.threshold));
         }});

    add({.name = "kmeans",
         .params = {integer("k", true, {}, 1, 256), integer("seed", false, -1, -1, 9.2e18)},
         .makes_labels = true,
         .run = [](OpContext& ctx, const json& p) {
             KMeansResult r = kmeans_intensity(ctx.image, p.at("k").get<int>(), resolve_seed(ctx, p));
             ctx.stage_stats["centroids"] = r.centroids;
             record_labels(ctx, std::move(r.labels));
         }});

    add({.name = "watershed",
         .params = {choice("gradient", false, "morph", {"morph", "sobel"}),
                    real("percentile", false, 10.0, 1e-9, 99.999)},
         .makes_labels = true,
         .run = [](OpContext& ctx, const json& p) {
             RasterImage grad = p.at("gradient") == "sobel"
                                    ? gradient(ctx.image, GradientOperator::sobel).magnitude
                                    : morph_gradient(ctx.image, StructuringElement::disk(1));
             LabelMap markers =
                 auto_markers_from_gradient(grad, p.at("percentile").get<double>());
             ctx.stage_stats["marker_count"] = markers.n_labels;
             record_labels(ctx, watershed(grad, markers));
         }});

    add({.name = "slic",
         .params = {integer("n_segments", true, {}, 1, 1e9),
                    real("compactness", false, 10.0, 1e-9, 1e6),
                    integer("max_iter", false, 10, 1, 1000)},
         .makes_labels = true,
         .run = [](OpContext& ctx, const json& p) {
             SlicParams sp;
             sp.n_segments = p.at("n_segments").get<int>();
             sp.compactness = p.at("compactness").get<double>();
             sp.max_iter = p.at("max_iter").get<int>();
             record_labels(ctx, slic(ctx.image, sp));
         }});

    add({.name = "felzenszwalb",
         .params = {real("k", true, {}, 1e-9, 1e9), real("sigma", false, 0.8, 0.0, 1e3),
                    integer("min_size", false, 20, 1, 1e9)},
         .makes_labels = true,
         .run = [](OpContext& ctx, const json& p) {
             FelzenszwalbParams fp{p.at("k").get<double>(), p.at("sigma").get<double>(),
                                   p.at("min_size").get<int>()};
             record_labels(ctx, felzenszwalb(ctx.image, fp));
         }});

    add({.name = "mask_apply",
         .params = {integer("target_label", false, 2, 0, 1e9)},
         .run = [](OpContext& ctx, const json& p) {
             ctx.image = threshold_mask_apply(ctx.image, *ctx.labels,
                                              p.at("target_label").get<int>());
         }});

    for (const char* name : {"blobs_log", "blobs_dog", "blobs_doh"}) {
        OpSpec op;
        op.name = name;
        op.params = {real("t_min", false, 2.0, 1e-9, 1e6), real("t_max", false, 64.0, 1e-9, 1e6),
                     integer("n_scales", false, 16, 3, 256),
                     real("threshold", false, 0.02, 0.0, 1e6),
                     boolean("include_border", false)};
        op.makes_blobs = true;
        op.extra_check = [](const json& p, int stage) {
            if (p.at("t_min").get<double>() >= p.at("t_max").get<double>())
                fail(stage, "blob detection needs t_min < t_max");
        };
        std::string n = name;
        op.run = [n](OpContext& ctx, const json& p) {
            BlobDetectParams bp = blob_params(p);
            std::vector<Blob> blobs = n == "blobs_log"   ? detect_blobs_log(ctx.image, bp)
                                      : n == "blobs_dog" ? detect_blobs_dog(ctx.image, bp)
                                                         : detect_blobs_doh(ctx.image, bp);
            ctx.stage_stats["blob_count"] = blobs.size();
            ctx.blobs = std::move(blobs);
        };
        add(std::move(op));
    }

    add({.name = "hog",
         .params = {integer("cell", false, 8, 2, 512), integer("block", false, 2, 1, 64),
                    integer("bins", false, 9, 2, 360), integer("stride", false, 1, 1, 64),
                    boolean("render", false)},
         .run = [](OpContext& ctx, const json& p) {
             HogSpec spec;
             spec.cell_size = p.at("cell").get<int>();
             spec.block_size = p.at("block").get<int>();
             spec.n_bins = p.at("bins").get<int>();
             spec.block_stride = p.at("stride").get<int>();
             HogDescriptor d = hog(ctx.image, spec);
             ctx.stage_stats["descriptor_length"] = d.values.size();
             ctx.stage_stats["hog_csv"] = hog_to_csv(d);
             if (p.at("render").get<bool>()) ctx.image = hog_render(d);
         }});

    add({.name = "overlay",
         .params = {choice("kind", true, {}, {"edges", "blobs", "labels"})},
         .run = [](OpContext& ctx, const json& p) {
             std::string kind = p.at("kind").get<std::string>();
             if (kind == "edges") ctx.image = overlay_edges(ctx.image, *ctx.edges);
             else if (kind == "blobs") ctx.image = overlay_blobs(ctx.image, *ctx.blobs);
             else ctx.image = overlay_labels(ctx.image, *ctx.labels);
         }});

    return ops;
}

}  // namespace

const std::map<std::string, OpSpec>& op_registry() {
    static const std::map<std::string, OpSpec> registry = build_registry();
    return registry;
}

json validate_params(const OpSpec& op, const json& raw, int stage_index) {
    if (!raw.is_object()) fail(stage_index, "params must be an object");
    for (auto it = raw.begin(); it != raw.end(); ++it) {
        bool known = false;
        for (const ParamSpec& ps : op.params) known = known || ps.name == it.key();
        if (!known) fail(stage_index, "unknown parameter '" + it.key() + "' for op '" + op.name + "'");
    }
    json out = json::object();
    for (const ParamSpec& ps : op.params) {
        if (!raw.contains(ps.name)) {
            if (ps.required) fail(stage_index, "missing required parameter '" + ps.name + "'");
            out[ps.name] = ps.def;
            continue;
        }
        const json& v = raw.at(ps.name);
        switch (ps.type) {
            case ParamSpec::Type::integer:
                if (!v.is_number_integer())
                    fail(stage_index, "parameter '" + ps.name + "' must be an integer");
                break;
            case ParamSpec::Type::real:
                if (!v.is_number()) fail(stage_index, "parameter '" + ps.name + "' must be a number");
                break;
            case ParamSpec::Type::boolean:
                if (!v.is_boolean()) fail(stage_index, "parameter '" + ps.name + "' must be a boolean");
                break;
            case ParamSpec::Type::choice: {
                if (!v.is_string()) fail(stage_index, "parameter '" + ps.name + "' must be a string");
                bool ok = false;
                for (const auto& c : ps.choices) ok = ok || c == v.get<std::string>();
                if (!ok) fail(stage_index, "parameter '" + ps.name + "' has no choice '" +
                                               v.get<std::string>() + "'");
                break;
            }
            case ParamSpec::Type::text:
                if (!v.is_string()) fail(stage_index, "parameter '" + ps.name + "' must be a string");
                break;
        }
        if (v.is_number()) {
            double d = v.get<double>();
            if (d < ps.min_value || d > ps.max_value)
                fail(stage_index, "parameter '" + ps.name + "' out of range");
        }
        out[ps.name] = v;
    }
    if (op.extra_check) op.extra_check(out, stage_index);
    return out;
}

namespace {

bool valid_name(const std::string& s) {
    if (s.empty() || s == "final" || s == "report") return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

PipelineSpec parse_pipeline_impl(const json& j) {
    PipelineSpec spec;
    if (!j.is_object()) throw std::invalid_argument("pipeline: top level must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "version" && it.key() != "stages" && it.key() != "global")
            throw std::invalid_argument("pipeline: unknown key '" + it.key() + "'");
    if (!j.contains("version") || !j.at("version").is_number_integer() || j.at("version") != 1)
        throw std::invalid_argument("pipeline: version must be the integer 1");
    if (!j.contains("stages") || !j.at("stages").is_array())
        throw std::invalid_argument("pipeline: stages must be an array");

    if (j.contains("global")) {
        const json& g = j.at("global");
        if (!g.is_object()) throw std::invalid_argument("pipeline: global must be an object");
        for (auto it = g.begin(); it != g.end(); ++it)
            if (it.key() != "seed" && it.key() != "border_policy")
                throw std::invalid_argument("pipeline: unknown global key '" + it.key() + "'");
        if (g.contains("seed")) {
            if (!g.at("seed").is_number_integer() || g.at("seed").get<long long>() < 0)
                throw std::invalid_argument("pipeline: global seed must be a non-negative integer");
            spec.seed = g.at("seed").get<std::uint64_t>();
        }
        if (g.contains("border_policy")) {
            std::string b = g.at("border_policy").get<std::string>();
            if (b != "reflect" && b != "replicate")
                throw std::invalid_argument("pipeline: border_policy must be reflect or replicate");
            spec.border_policy = b;
        }
    }

    bool has_labels = false, has_blobs = false, has_edges = false;
    std::vector<std::string> names;
    std::vector<std::string> image_names;  // save_as names that hold plain images
    int index = 0;
    for (const json& sj : j.at("stages")) {
        if (!sj.is_object()) fail(index, "stage must be an object");
        for (auto it = sj.begin(); it != sj.end(); ++it)
            if (it.key() != "op" && it.key() != "params" && it.key() != "save_as")
                fail(index, "unknown stage key '" + it.key() + "'");
        if (!sj.contains("op") || !sj.at("op").is_string()) fail(index, "missing op name");

        PipelineStage stage;
        stage.op = sj.at("op").get<std::string>();
        auto found = op_registry().find(stage.op);
        if (found == op_registry().end()) fail(index, "unknown operation '" + stage.op + "'");
        const OpSpec& op = found->second;

        stage.params = validate_params(op, sj.contains("params") ? sj.at("params") : json::object(),
                                       index);
        if (sj.contains("save_as")) {
            if (!sj.at("save_as").is_string() || !valid_name(sj.at("save_as").get<std::string>()))
                fail(index, "save_as must be a non-reserved name of [A-Za-z0-9_-]");
            stage.save_as = sj.at("save_as").get<std::string>();
            if (std::find(names.begin(), names.end(), stage.save_as) != names.end())
                fail(index, "duplicate save_as name '" + stage.save_as + "'");
            names.push_back(stage.save_as);
            if (!op.makes_labels && !op.makes_blobs) image_names.push_back(stage.save_as);
        }

        // Artifact-flow checks so later stages cannot hit missing inputs.
        if (stage.op == "mask_apply" && !has_labels)
            fail(index, "mask_apply requires an earlier label-producing stage");
        if (stage.op == "overlay") {
            std::string kind = stage.params.at("kind").get<std::string>();
            if ((kind == "edges" && !has_edges) || (kind == "blobs" && !has_blobs) ||
                (kind == "labels" && !has_labels))
                fail(index, "overlay '" + kind + "' has no earlier producing stage");
        }
        if (stage.op == "image_diff") {
            std::string ref = stage.params.at("with").get<std::string>();
            if (ref != "input" &&
                std::find(image_names.begin(), image_names.end(), ref) == image_names.end())
                fail(index, "image_diff refers to unknown image '" + ref + "'");
        }
        has_labels = has_labels || op.makes_labels;
        has_blobs = has_blobs || op.makes_blobs;
        has_edges = has_edges || op.makes_edges;

        spec.stages.push_back(std::move(stage));
        ++index;
    }
    return spec;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

}  // namespace

PipelineSpec parse_pipeline_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("pipeline: ") + e.what());
    }
    PipelineSpec spec = parse_pipeline_impl(j);
    spec.source_sha256 = sha256_hex(text);
    return spec;
}

PipelineSpec parse_pipeline(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_pipeline_text(text);
}

json RunReport::to_json() const {
    json j;
    j["stages"] = json::array();
    for (const StageReport& s : stages) {
        json e;
        e["op"] = s.op;
        e["ms"] = s.ms;
        e["outputs"] = s.outputs;
        e["stats"] = s.stats;
        j["stages"].push_back(std::move(e));
    }
    j["seed"] = seed;
    j["pipeline_sha256"] = pipeline_sha256;
    j["rng_algorithm"] = kRngAlgorithm;
    if (failed) {
        j["failed"] = true;
        j["error"] = error;
    }
    return j;
}

RunReport run_pipeline(const PipelineSpec& spec, const std::string& input_path,
                       const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    OpContext ctx;
    ctx.image = load_image(input_path);
    ctx.original = ctx.image;
    ctx.seed = spec.seed;
    ctx.border = spec.border_policy == "replicate" ? BorderPolicy::replicate()
                                                   : BorderPolicy::reflect();

    RunReport report;
    report.seed = spec.seed;
    report.pipeline_sha256 = spec.source_sha256;

    auto image_stats = [](const RasterImage& img) {
        double lo = 1e300, hi = -1e300, sum = 0.0;
        for (double v : img.pixels) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        json s;
        s["min"] = lo;
        s["max"] = hi;
        s["mean"] = sum / static_cast<double>(img.pixels.size());
        return s;
    };

    for (std::size_t i = 0; i < spec.stages.size(); ++i) {
        const PipelineStage& stage = spec.stages[i];
        const OpSpec& op = op_registry().at(stage.op);
        StageReport sr;
        sr.op = stage.op;
        ctx.stage_stats = json::object();
        auto t0 = std::chrono::steady_clock::now();
        try {
            op.run(ctx, stage.params);
        } catch (const std::exception& e) {
            report.failed = true;
            report.error = "stage " + std::to_string(i) + " (" + stage.op + "): " + e.what();
            report.stages.push_back(std::move(sr));
            write_text((fs::path(out_dir) / "report.json").string(), report.to_json().dump(2) + "\n");
            return report;
        }
        sr.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();

        // hog_csv is a side artifact, not a stat to report verbatim.
        std::string hog_csv;
        if (ctx.stage_stats.contains("hog_csv")) {
            hog_csv = ctx.stage_stats.at("hog_csv").get<std::string>();
            ctx.stage_stats.erase("hog_csv");
        }
        sr.stats = ctx.stage_stats;
        sr.stats.update(image_stats(ctx.image));

        if (!stage.save_as.empty()) {
            const std::string base = (fs::path(out_dir) / stage.save_as).string();
            if (op.makes_blobs && ctx.blobs) {
                write_text(base + ".csv", blobs_to_csv(*ctx.blobs));
                sr.outputs.push_back(stage.save_as + ".csv");
            } else if (op.makes_labels && ctx.labels) {
                save_image(label_map_to_image(*ctx.labels), base + ".pgm");
                write_text(base + ".csv", label_map_to_csv(*ctx.labels, ctx.image));
                sr.outputs.push_back(stage.save_as + ".pgm");
                sr.outputs.push_back(stage.save_as + ".csv");
            } else if (stage.op == "hog" && !hog_csv.empty()) {
                write_text(base + ".csv", hog_csv);
                sr.outputs.push_back(stage.save_as + ".csv");
                std::string ext = ctx.image.channels == 3 ? ".ppm" : ".pgm";
                save_image(ctx.image, base + ext);
                sr.outputs.push_back(stage.save_as + ext);
            } else if (stage.op == "histogram") {
                std::string csv = "bin,count\n";
                const json& bins = sr.stats.at("histogram");
                for (int b = 0; b < 256; ++b)
                    csv += std::to_string(b) + "," + bins.at(b).dump() + "\n";
                write_text(base + ".csv", csv);
                sr.outputs.push_back(stage.save_as + ".csv");
            } else {
                std::string ext = ctx.image.channels == 3 ? ".ppm" : ".pgm";
                save_image(ctx.image, base + ext);
                sr.outputs.push_back(stage.save_as + ext);
            }
            if (op.makes_labels || op.makes_blobs) ctx.saved_images.erase(stage.save_as);
            else ctx.saved_images[stage.save_as] = ctx.image;
        }
        // Keep the histogram out of the report body; it lives in the CSV.
        if (sr.stats.contains("histogram")) sr.stats.erase("histogram");
        report.stages.push_back(std::move(sr));
    }

    // Final artifacts: final.pgm always, final.ppm additionally for RGB.
    RasterImage final_gray = ctx.image.channels == 3 ? to_gray(ctx.image) : ctx.image;
    save_image(final_gray, (fs::path(out_dir) / "final.pgm").string());
    if (ctx.image.channels == 3)
        save_image(ctx.image, (fs::path(out_dir) / "final.ppm").string());
    write_text((fs::path(out_dir) / "report.json").string(), report.to_json().dump(2) + "\n");
    return report;
}

}  // namespace radiolith
