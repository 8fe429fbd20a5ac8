#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fundus/enhance.hpp"
#include "fundus/image.hpp"

namespace fundus::pipeline {

enum class StepKind {
    Resize,
    RandomHFlip,
    RandomVFlip,
    Normalize,
    Green,
    Ben,
    Clahe,
    GreenBen,
    GreenClahe,
    ReplicateRgb,
};

struct StepSpec {
    StepKind kind;
    int width = 0, height = 0;     // resize
    double probability = 0.5;      // random_* kinds
    bool norm_defaults = true;     // normalize: use per-channel defaults
    NormalizationParams norm;      // normalize (when not defaulted)
    BenParams ben;                 // ben / green_ben
    ClaheParams clahe;             // clahe / green_clahe
    bool replicate = false;        // green_ben / green_clahe
};

/// Ordered step list plus the determinism seed. Random flip decisions for an
/// image depend only on (seed, image id, step index), never on processing
/// order or worker count.
struct PipelineSpec {
    std::vector<StepSpec> steps;
    std::uint64_t seed = 0;
    SampleDepth output_depth = SampleDepth::U8; // F32 exactly when normalize is last
};

/// Strict JSON config: {"seed": N, "steps": [{"kind": ..., ...}, ...]}.
/// Unknown keys are rejected; semantic violations name the step index.
PipelineSpec parse_pipeline(const std::string& text);
PipelineSpec parse_pipeline_file(const std::string& path);

/// Uniform draw in [0,1) for (seed, image id, step index); pure function of
/// its arguments so the batch runner is order- and worker-independent.
double step_draw(std::uint64_t seed, const std::string& image_id, std::size_t step_index);

struct ImageResult {
    std::string id;
    bool ok = false;
    std::string output_path; // empty on failure
    bool hflip = false;
    bool vflip = false;
    double ms = 0.0;
    std::string error; // empty on success
};

struct RunReport {
    std::vector<ImageResult> images; // input order
    double total_ms = 0.0;
    int workers = 1;

    std::size_t ok_count() const;
    std::size_t failed_count() const;
};

/// Processes every input through the steps, writing PNG for U8 terminals and
/// a raw float tensor file (.ften) for F32 terminals. Per-image failures are
/// recorded, never fatal; an unwritable out_dir is.
RunReport run_pipeline(const PipelineSpec& spec,
                       const std::vector<std::pair<std::string, std::string>>& inputs,
                       const std::string& out_dir, int workers = 1);

/// Pipeline truncated after step_index, random steps forced to apply.
ImageBuffer preview_step(const PipelineSpec& spec, std::size_t step_index, const ImageBuffer& img);

/// One JSON object per image, machine-readable, input order.
void write_report(const RunReport& report, const std::string& path);

/// Raw float tensor container: "FTEN" magic, u32 channels/height/width
/// (little endian), then float32 samples row-major channel-interleaved.
void write_float_tensor(const ImageBuffer& img, const std::string& path);
ImageBuffer read_float_tensor(const std::string& path);

} // namespace fundus::pipeline
