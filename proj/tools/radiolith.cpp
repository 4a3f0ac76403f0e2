#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "radiolith/image_io.hpp"
#include "radiolith/pipeline.hpp"
#include "radiolith/util.hpp"

namespace {

using nlohmann::json;

std::string normalize_name(std::string s) {
    for (char& c : s)
        if (c == '-') c = '_';
    return s;
}

// Leftover "--key value" flags become op parameters; values that read as
// JSON scalars keep their type, everything else stays a string.
json collect_params(const std::vector<std::string>& extras) {
    json params = json::object();
    for (std::size_t i = 0; i < extras.size(); ++i) {
        std::string key = extras[i];
        if (key.rfind("--", 0) != 0)
            throw CLI::ValidationError("op", "unexpected argument '" + key + "'");
        key = normalize_name(key.substr(2));
        std::string value;
        auto eq = key.find('=');
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (i + 1 >= extras.size())
                throw CLI::ValidationError("op", "flag --" + key + " needs a value");
            value = extras[++i];
        }
        json v = json::parse(value, nullptr, false);
        if (v.is_discarded() || v.is_object() || v.is_array()) v = value;
        params[key] = v;
    }
    return params;
}

int run_single_op(const std::string& raw_name, const std::string& input,
                  const std::string& output, std::uint64_t seed, const json& raw_params) {
    const std::string name = normalize_name(raw_name);
    auto found = radiolith::op_registry().find(name);
    if (found == radiolith::op_registry().end())
        throw CLI::ValidationError("op", "unknown operation '" + name + "'");
    const radiolith::OpSpec& op = found->second;

    json params;
    try {
        params = radiolith::validate_params(op, raw_params, -1);
    } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("op", e.what());
    }

    const bool stat_op = name == "otsu" || name == "centroid";
    if (!stat_op && output.empty())
        throw CLI::ValidationError("op", "-o output path required for '" + name + "'");

    radiolith::OpContext ctx;
    ctx.image = radiolith::load_image(input);
    ctx.original = ctx.image;
    ctx.seed = seed;
    op.run(ctx, params);

    if (name == "otsu") {
        std::printf("%d\n", ctx.stage_stats.at("threshold_8bit").get<int>());
        return 0;
    }
    if (name == "centroid") {
        std::printf("%.10g %.10g\n", ctx.stage_stats.at("cx").get<double>(),
                    ctx.stage_stats.at("cy").get<double>());
        return 0;
    }
    auto ends_with = [](const std::string& s, const std::string& suffix) {
        return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (op.makes_blobs) {
        std::ofstream out(output, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + output);
        out << radiolith::blobs_to_csv(*ctx.blobs);
        return 0;
    }
    if (name == "histogram") {
        std::ofstream out(output, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + output);
        out << "bin,count\n";
        const json& bins = ctx.stage_stats.at("histogram");
        for (int b = 0; b < 256; ++b) out << b << "," << bins.at(b) << "\n";
        return 0;
    }
    if (name == "hog" && !params.at("render").get<bool>()) {
        std::ofstream out(output, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + output);
        out << ctx.stage_stats.at("hog_csv").get<std::string>();
        return 0;
    }
    if (op.makes_labels && ctx.labels) {
        if (ends_with(output, ".csv")) {
            std::ofstream out(output, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + output);
            out << radiolith::label_map_to_csv(*ctx.labels, ctx.image);
        } else {
            radiolith::save_image(radiolith::label_map_to_image(*ctx.labels), output);
        }
        return 0;
    }
    radiolith::save_image(ctx.image, output);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radiolith - grayscale radiograph processing pipelines"};
    app.require_subcommand(1);
    int threads = 1;

    auto* run = app.add_subcommand("run", "execute a pipeline file");
    std::string pipeline_path, input_path, out_dir;
    long long seed_override = -1;
    run->add_option("pipeline", pipeline_path, "pipeline JSON file")->required();
    run->add_option("-i,--input", input_path, "input image")->required();
    run->add_option("-o,--outdir", out_dir, "output directory")->required();
    run->add_option("--seed", seed_override, "override the pipeline's global seed");
    run->add_option("--threads", threads, "worker threads for row-parallel stages");

    auto* op_cmd = app.add_subcommand("op", "run a single operation");
    op_cmd->allow_extras();
    std::string op_name, op_input, op_output;
    long long op_seed = 0;
    op_cmd->add_option("name", op_name, "operation name")->required();
    op_cmd->add_option("-i,--input", op_input, "input image")->required();
    op_cmd->add_option("-o,--output", op_output, "output file");
    op_cmd->add_option("--seed", op_seed, "seed for randomized operations");
    op_cmd->add_option("--threads", threads, "worker threads for row-parallel stages");

    auto* validate = app.add_subcommand("validate", "check a pipeline file");
    std::string validate_path;
    validate->add_option("pipeline", validate_path, "pipeline JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }
    radiolith::set_thread_count(threads);

    try {
        if (run->parsed()) {
            radiolith::PipelineSpec spec = radiolith::parse_pipeline(pipeline_path);
            if (seed_override >= 0) spec.seed = static_cast<std::uint64_t>(seed_override);
            radiolith::RunReport report = radiolith::run_pipeline(spec, input_path, out_dir);
            if (report.failed) {
                std::cerr << "pipeline failed: " << report.error << "\n";
                return 1;
            }
            std::printf("%zu stage(s) done, outputs in %s\n", report.stages.size(),
                        out_dir.c_str());
            return 0;
        }
        if (op_cmd->parsed()) {
            json params;
            try {
                params = collect_params(op_cmd->remaining());
            } catch (const CLI::Error& e) {
                std::cerr << e.what() << "\n";
                return 2;
            }
            try {
                return run_single_op(op_name, op_input, op_output,
                                     static_cast<std::uint64_t>(op_seed < 0 ? 0 : op_seed), params);
            } catch (const CLI::Error& e) {
                std::cerr << e.what() << "\n";
                return 2;
            }
        }
        if (validate->parsed()) {
            radiolith::PipelineSpec spec = radiolith::parse_pipeline(validate_path);
            std::printf("OK: %zu stage(s), sha256 %s\n", spec.stages.size(),
                        spec.source_sha256.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
