#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "radiolith/blobs.hpp"
#include "radiolith/edge.hpp"
#include "radiolith/kernel.hpp"
#include "radiolith/raster.hpp"
#include "radiolith/segmentation.hpp"

namespace radiolith {

/// State threaded through a pipeline run: the current image plus the side
/// artifacts later stages may consume.
struct OpContext {
    RasterImage image;
    RasterImage original;
    std::map<std::string, RasterImage> saved_images;
    std::optional<LabelMap> labels;
    std::optional<std::vector<Blob>> blobs;
    std::optional<EdgeMap> edges;
    std::uint64_t seed = 0;
    BorderPolicy border = BorderPolicy::reflect();
    nlohmann::json stage_stats;  // per-stage extras (threshold, centroid, counts)
};

struct ParamSpec {
    enum class Type { integer, real, boolean, choice, text };
    std::string name;
    Type type = Type::real;
    bool required = false;
    nlohmann::json def;
    double min_value = -1e308;
    double max_value = 1e308;
    std::vector<std::string> choices;
};

struct OpSpec {
    std::string name;
    std::vector<ParamSpec> params;
    bool makes_labels = false;
    bool makes_blobs = false;
    bool makes_edges = false;
    // Extra cross-parameter validation, run at parse time.
    std::function<void(const nlohmann::json&, int)> extra_check;
    std::function<void(OpContext&, const nlohmann::json&)> run;
};

const std::map<std::string, OpSpec>& op_registry();

/// Checks types, ranges and unknown keys against the schema and fills in
/// defaults. stage_index is used in error messages; -1 for CLI usage.
nlohmann::json validate_params(const OpSpec& op, const nlohmann::json& raw, int stage_index);

struct PipelineStage {
    std::string op;
    nlohmann::json params;  // validated, defaults applied
    std::string save_as;    // empty = none
};

struct PipelineSpec {
    int version = 1;
    std::uint64_t seed = 0;
    std::string border_policy = "reflect";
    std::vector<PipelineStage> stages;
    std::string source_sha256;
};

/// Parses and fully validates a pipeline file; any spec this accepts cannot
/// fail on parameter errors at runtime.
PipelineSpec parse_pipeline(const std::string& path);
PipelineSpec parse_pipeline_text(const std::string& text);

struct StageReport {
    std::string op;
    double ms = 0.0;
    std::vector<std::string> outputs;
    nlohmann::json stats;
};

struct RunReport {
    std::vector<StageReport> stages;
    std::uint64_t seed = 0;
    std::string pipeline_sha256;
    bool failed = false;
    std::string error;

    nlohmann::json to_json() const;
};

/// Executes the stages in order, writes save_as artifacts, final.pgm
/// (plus final.ppm when the final image is RGB) and report.json into
/// out_dir. A stage failure stops the run and flags the partial report.
RunReport run_pipeline(const PipelineSpec& spec, const std::string& input_path,
                       const std::string& out_dir);

}  // namespace radiolith
