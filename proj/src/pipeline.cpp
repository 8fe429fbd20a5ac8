#include "fundus/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>
#include <thread>

#include <nlohmann/json.hpp>

#include "fundus/codec.hpp"

namespace fundus::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ------------------------------------------------------------ parsing

int parse_error_line(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ValidationError(where + ": unknown key '" + key + "'");
    }
}

StepKind parse_kind(const std::string& s, const std::string& where) {
    if (s == "resize") return StepKind::Resize;
    if (s == "random_hflip") return StepKind::RandomHFlip;
    if (s == "random_vflip") return StepKind::RandomVFlip;
    if (s == "normalize") return StepKind::Normalize;
    if (s == "green") return StepKind::Green;
    if (s == "ben") return StepKind::Ben;
    if (s == "clahe") return StepKind::Clahe;
    if (s == "green_ben") return StepKind::GreenBen;
    if (s == "green_clahe") return StepKind::GreenClahe;
    if (s == "replicate_rgb") return StepKind::ReplicateRgb;
    throw ValidationError(where + ": unknown step kind '" + s + "'");
}

bool is_random(StepKind k) { return k == StepKind::RandomHFlip || k == StepKind::RandomVFlip; }

StepSpec parse_step(const json& j, std::size_t index) {
    const std::string where = "step " + std::to_string(index);
    if (!j.is_object()) throw ValidationError(where + ": must be an object");
    if (!j.contains("kind") || !j["kind"].is_string())
        throw ValidationError(where + ": missing string 'kind'");

    StepSpec step;
    step.kind = parse_kind(j["kind"].get<std::string>(), where);

    switch (step.kind) {
    case StepKind::Resize:
        reject_unknown_keys(j, {"kind", "width", "height"}, where);
        if (!j.contains("width") || !j.contains("height"))
            throw ValidationError(where + ": resize requires width and height");
        step.width = j["width"].get<int>();
        step.height = j["height"].get<int>();
        if (step.width < 1 || step.height < 1)
            throw ValidationError(where + ": resize dimensions must be >= 1");
        break;
    case StepKind::RandomHFlip:
    case StepKind::RandomVFlip:
        reject_unknown_keys(j, {"kind", "probability"}, where);
        if (j.contains("probability")) step.probability = j["probability"].get<double>();
        if (!(step.probability >= 0.0 && step.probability <= 1.0))
            throw ValidationError(where + ": probability must be in [0,1]");
        break;
    case StepKind::Normalize:
        reject_unknown_keys(j, {"kind", "mean", "std"}, where);
        if (j.contains("mean") != j.contains("std"))
            throw ValidationError(where + ": normalize needs both mean and std or neither");
        if (j.contains("mean")) {
            step.norm_defaults = false;
            step.norm.mean = j["mean"].get<std::vector<double>>();
            step.norm.std = j["std"].get<std::vector<double>>();
            if (step.norm.mean.size() != step.norm.std.size() || step.norm.mean.empty())
                throw ValidationError(where + ": mean and std must be equal-length and non-empty");
            for (double s : step.norm.std)
                if (!(s > 0.0)) throw ValidationError(where + ": std entries must be > 0");
        }
        break;
    case StepKind::Ben:
    case StepKind::GreenBen:
        reject_unknown_keys(j,
                            step.kind == StepKind::Ben
                                ? std::initializer_list<const char*>{"kind", "sigma", "alpha",
                                                                     "beta", "bias"}
                                : std::initializer_list<const char*>{"kind", "sigma", "alpha",
                                                                     "beta", "bias", "replicate"},
                            where);
        if (j.contains("sigma")) {
            const double sigma = j["sigma"].get<double>();
            if (!(sigma > 0.0)) throw ValidationError(where + ": sigma must be > 0");
            step.ben.sigma = sigma;
        }
        if (j.contains("alpha")) step.ben.alpha = j["alpha"].get<double>();
        if (j.contains("beta")) step.ben.beta = j["beta"].get<double>();
        if (j.contains("bias")) step.ben.bias = j["bias"].get<double>();
        if (j.contains("replicate")) step.replicate = j["replicate"].get<bool>();
        break;
    case StepKind::Clahe:
    case StepKind::GreenClahe:
        reject_unknown_keys(j,
                            step.kind == StepKind::Clahe
                                ? std::initializer_list<const char*>{"kind", "tiles_x", "tiles_y",
                                                                     "clip_limit"}
                                : std::initializer_list<const char*>{"kind", "tiles_x", "tiles_y",
                                                                     "clip_limit", "replicate"},
                            where);
        if (j.contains("tiles_x")) step.clahe.tiles_x = j["tiles_x"].get<int>();
        if (j.contains("tiles_y")) step.clahe.tiles_y = j["tiles_y"].get<int>();
        if (j.contains("clip_limit")) step.clahe.clip_limit = j["clip_limit"].get<double>();
        if (step.clahe.tiles_x < 1 || step.clahe.tiles_y < 1)
            throw ValidationError(where + ": tile counts must be >= 1");
        if (!(step.clahe.clip_limit >= 1.0))
            throw ValidationError(where + ": clip_limit must be >= 1");
        if (j.contains("replicate")) step.replicate = j["replicate"].get<bool>();
        break;
    case StepKind::Green:
    case StepKind::ReplicateRgb:
        reject_unknown_keys(j, {"kind"}, where);
        break;
    }
    return step;
}

} // namespace

PipelineSpec parse_pipeline(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("pipeline config: ") + e.what(),
                         parse_error_line(text, e.byte));
    }
    if (!doc.is_object()) throw ValidationError("pipeline config must be a JSON object");

    try {
        reject_unknown_keys(doc, {"seed", "steps", "output_depth"}, "pipeline config");
        if (!doc.contains("steps") || !doc["steps"].is_array() || doc["steps"].empty())
            throw ValidationError("pipeline config requires a non-empty 'steps' array");

        PipelineSpec spec;
        if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();

        for (std::size_t i = 0; i < doc["steps"].size(); ++i)
            spec.steps.push_back(parse_step(doc["steps"][i], i));

        for (std::size_t i = 0; i < spec.steps.size(); ++i) {
            if (spec.steps[i].kind == StepKind::Normalize && i + 1 != spec.steps.size())
                throw ValidationError("step " + std::to_string(i) +
                                      ": normalize must be the last step");
        }
        const bool has_normalize = spec.steps.back().kind == StepKind::Normalize;
        spec.output_depth = has_normalize ? SampleDepth::F32 : SampleDepth::U8;
        if (doc.contains("output_depth")) {
            const std::string d = doc["output_depth"].get<std::string>();
            if (d != "u8" && d != "f32")
                throw ValidationError("output_depth must be 'u8' or 'f32'");
            const SampleDepth want = d == "u8" ? SampleDepth::U8 : SampleDepth::F32;
            if (want != spec.output_depth)
                throw ValidationError("output_depth '" + d + "' is inconsistent with the steps (" +
                                      std::string(has_normalize
                                                      ? "normalize yields f32"
                                                      : "no normalize step, terminal is u8") +
                                      ")");
        }
        return spec;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("pipeline config: ") + e.what());
    }
}

PipelineSpec parse_pipeline_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open pipeline config", path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_pipeline(buf.str());
}

// ------------------------------------------------------------ randomness

namespace {

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

double step_draw(std::uint64_t seed, const std::string& image_id, std::size_t step_index) {
    const std::uint64_t bits = splitmix(splitmix(splitmix(seed) ^ fnv1a(image_id)) ^ step_index);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// ------------------------------------------------------------ execution

namespace {

struct StepOutcome {
    ImageBuffer img;
    bool hflip = false;
    bool vflip = false;
};

NormalizationParams default_norm_for(const ImageBuffer& img) {
    if (img.channels() == 3) return NormalizationParams::imagenet_rgb();
    throw ContractError("normalize: single-channel images need explicit mean/std");
}

StepOutcome apply_steps(const PipelineSpec& spec, const std::string& id, ImageBuffer img,
                        bool force_random, std::size_t last_step) {
    StepOutcome out;
    for (std::size_t i = 0; i <= last_step; ++i) {
        const StepSpec& step = spec.steps[i];
        switch (step.kind) {
        case StepKind::Resize:
            img = resize_bilinear(img, step.width, step.height);
            break;
        case StepKind::RandomHFlip:
            if (force_random || step_draw(spec.seed, id, i) < step.probability) {
                img = flip_horizontal(img);
                out.hflip = true;
            }
            break;
        case StepKind::RandomVFlip:
            if (force_random || step_draw(spec.seed, id, i) < step.probability) {
                img = flip_vertical(img);
                out.vflip = true;
            }
            break;
        case StepKind::Normalize:
            img = normalize(img, step.norm_defaults ? default_norm_for(img) : step.norm);
            break;
        case StepKind::Green:
            img = extract_green(img);
            break;
        case StepKind::Ben:
            img = ben_enhance(img, step.ben);
            break;
        case StepKind::Clahe:
            img = clahe(img, step.clahe);
            break;
        case StepKind::GreenBen:
            img = green_ben(img, step.ben, step.replicate);
            break;
        case StepKind::GreenClahe:
            img = green_clahe(img, step.clahe, step.replicate);
            break;
        case StepKind::ReplicateRgb:
            img = replicate_to_rgb(img);
            break;
        }
    }
    out.img = std::move(img);
    return out;
}

} // namespace

ImageBuffer preview_step(const PipelineSpec& spec, std::size_t step_index,
                         const ImageBuffer& img) {
    if (step_index >= spec.steps.size())
        throw ContractError("preview_step index " + std::to_string(step_index) +
                            " out of range (steps: " + std::to_string(spec.steps.size()) + ")");
    return apply_steps(spec, "", img, /*force_random=*/true, step_index).img;
}

std::size_t RunReport::ok_count() const {
    std::size_t n = 0;
    for (const auto& r : images)
        if (r.ok) ++n;
    return n;
}

std::size_t RunReport::failed_count() const {
    return images.size() - ok_count();
}

RunReport run_pipeline(const PipelineSpec& spec,
                       const std::vector<std::pair<std::string, std::string>>& inputs,
                       const std::string& out_dir, int workers) {
    if (spec.steps.empty()) throw ContractError("pipeline spec has no steps");
    if (workers < 1) throw ContractError("worker count must be >= 1");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    {
        // Fail fast on an unwritable destination.
        const fs::path probe = fs::path(out_dir) / ".write_probe";
        std::ofstream f(probe);
        if (!f) throw IoError("output directory is not writable", out_dir);
        f.close();
        fs::remove(probe, ec);
    }

    const auto t0 = std::chrono::steady_clock::now();
    RunReport report;
    report.workers = workers;
    report.images.resize(inputs.size());

    std::atomic<std::size_t> next{0};
    auto worker_fn = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= inputs.size()) break;
            const auto& [id, path] = inputs[i];
            ImageResult res;
            res.id = id;
            const auto start = std::chrono::steady_clock::now();
            try {
                StepOutcome out = apply_steps(spec, id, load_image(path),
                                              /*force_random=*/false, spec.steps.size() - 1);
                res.hflip = out.hflip;
                res.vflip = out.vflip;
                const bool f32 = out.img.depth() == SampleDepth::F32;
                const fs::path dest = fs::path(out_dir) / (id + (f32 ? ".ften" : ".png"));
                if (f32)
                    write_float_tensor(out.img, dest.string());
                else
                    save_image(out.img, dest.string());
                res.output_path = dest.string();
                res.ok = true;
            } catch (const std::exception& e) {
                res.ok = false;
                res.error = e.what();
            }
            res.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               start)
                         .count();
            report.images[i] = std::move(res);
        }
    };

    if (workers == 1) {
        worker_fn();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn);
        for (auto& t : pool) t.join();
    }

    report.total_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

void write_report(const RunReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report", path);
    for (const auto& r : report.images) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["status"] = r.ok ? "ok" : "failed";
        j["output"] = r.output_path;
        j["hflip"] = r.hflip;
        j["vflip"] = r.vflip;
        j["ms"] = r.ms;
        if (!r.ok) j["error"] = r.error;
        out << j.dump() << '\n';
    }
}

void write_float_tensor(const ImageBuffer& img, const std::string& path) {
    if (img.depth() != SampleDepth::F32)
        throw ContractError("write_float_tensor requires an F32 buffer");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write tensor", path);
    const std::uint32_t dims[3] = {static_cast<std::uint32_t>(img.channels()),
                                   static_cast<std::uint32_t>(img.height()),
                                   static_cast<std::uint32_t>(img.width())};
    out.write("FTEN", 4);
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    const auto samples = img.f32_samples();
    out.write(reinterpret_cast<const char*>(samples.data()),
              static_cast<std::streamsize>(samples.size() * sizeof(float)));
    if (!out) throw IoError("tensor write failed", path);
}

ImageBuffer read_float_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open tensor", path);
    char magic[4];
    std::uint32_t dims[3];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || std::string_view(magic, 4) != "FTEN")
        throw DecodeError("not a float tensor file", path);
    ImageBuffer img = ImageBuffer::f32(static_cast<int>(dims[2]), static_cast<int>(dims[1]),
                                       static_cast<int>(dims[0]));
    auto samples = img.f32_samples();
    in.read(reinterpret_cast<char*>(samples.data()),
            static_cast<std::streamsize>(samples.size() * sizeof(float)));
    if (!in) throw DecodeError("truncated float tensor file", path);
    return img;
}

} // namespace fundus::pipeline
