#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "fundus/codec.hpp"
#include "fundus/csv.hpp"
#include "fundus/dataset.hpp"
#include "fundus/enhance.hpp"
#include "fundus/metrics.hpp"
#include "fundus/montage.hpp"
#include "fundus/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fundus;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

dataset::DatasetSchema schema_from_flags(const std::string& name, int dr_classes,
                                         int dme_classes) {
    if (name != "custom") return dataset::DatasetSchema::by_name(name);
    return dataset::DatasetSchema::custom(
        "custom", dr_classes, dme_classes > 0 ? std::optional<int>(dme_classes) : std::nullopt);
}

int default_workers() {
    if (const char* env = std::getenv("FUNDUS_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid FUNDUS_WORKERS value '" << env << "'\n";
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

// ------------------------------------------------------------ enhance

struct EnhanceOpts {
    std::string method, input, output;
    double sigma = 0.0; // 0 = AUTO
    double alpha = 4.0, beta = -4.0, bias = 128.0;
    std::string tiles = "8x8";
    double clip = 2.0;
    bool replicate = false;
};

ClaheParams clahe_from_flags(const std::string& tiles, double clip) {
    ClaheParams p;
    p.clip_limit = clip;
    const auto x = tiles.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(tiles);
        p.tiles_x = std::stoi(tiles.substr(0, x));
        p.tiles_y = std::stoi(tiles.substr(x + 1));
    } catch (const std::exception&) {
        throw ValidationError("--tiles must look like 8x8, got '" + tiles + "'");
    }
    return p;
}

int run_enhance(const EnhanceOpts& o) {
    BenParams ben;
    if (o.sigma != 0.0) {
        if (o.sigma < 0.0) throw ValidationError("--sigma must be > 0");
        ben.sigma = o.sigma;
    }
    ben.alpha = o.alpha;
    ben.beta = o.beta;
    ben.bias = o.bias;
    const ClaheParams cl = clahe_from_flags(o.tiles, o.clip);

    const auto t0 = std::chrono::steady_clock::now();
    const ImageBuffer img = load_image(o.input);
    ImageBuffer out;
    std::ostringstream params;
    if (o.method == "green") {
        out = extract_green(img);
        if (o.replicate) out = replicate_to_rgb(out);
        params << "replicate=" << (o.replicate ? "true" : "false");
    } else if (o.method == "ben") {
        out = ben_enhance(img, ben);
        params << "sigma=" << (ben.sigma ? std::to_string(*ben.sigma) : "auto")
               << " alpha=" << ben.alpha << " beta=" << ben.beta << " bias=" << ben.bias;
    } else if (o.method == "clahe") {
        out = clahe(img, cl);
        params << "tiles=" << cl.tiles_x << "x" << cl.tiles_y << " clip=" << cl.clip_limit;
    } else if (o.method == "greenben") {
        out = green_ben(img, ben, o.replicate);
        params << "sigma=" << (ben.sigma ? std::to_string(*ben.sigma) : "auto")
               << " alpha=" << ben.alpha << " beta=" << ben.beta << " bias=" << ben.bias
               << " replicate=" << (o.replicate ? "true" : "false");
    } else if (o.method == "greenclahe") {
        out = green_clahe(img, cl, o.replicate);
        params << "tiles=" << cl.tiles_x << "x" << cl.tiles_y << " clip=" << cl.clip_limit
               << " replicate=" << (o.replicate ? "true" : "false");
    } else {
        throw ValidationError("unknown enhancement method '" + o.method +
                              "' (valid: green, ben, clahe, greenben, greenclahe)");
    }
    save_image(out, o.output);
    std::cout << o.method << " " << params.str() << " " << ms_since(t0) << "ms -> " << o.output
              << "\n";
    return kExitOk;
}

// ------------------------------------------------------------ pipeline

struct PipelineOpts {
    std::string config, manifest, out_dir;
    std::string report_path;
    int workers = 0; // 0 = default
};

// Accepts either a plain id,image_path listing or a full dataset manifest;
// only the first two columns are used here.
std::vector<std::pair<std::string, std::string>> read_inputs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest", path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("manifest is empty: " + path);
    auto header = csv::split_line(line);
    if (header.size() < 2 || header[0] != "id" || header[1] != "image_path")
        throw ValidationError("manifest header must start with: id,image_path");
    std::vector<std::pair<std::string, std::string>> inputs;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = csv::split_line(line);
        if (fields.size() < 2 || fields.size() != header.size())
            throw ValidationError("manifest row " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields");
        inputs.emplace_back(fields[0], fields[1]);
    }
    return inputs;
}

int run_pipeline_cmd(const PipelineOpts& o) {
    const auto spec = pipeline::parse_pipeline_file(o.config);
    const auto inputs = read_inputs(o.manifest);
    const int workers = o.workers > 0 ? o.workers : default_workers();

    const auto report = pipeline::run_pipeline(spec, inputs, o.out_dir, workers);

    const std::string report_path =
        o.report_path.empty() ? (fs::path(o.out_dir) / "report.jsonl").string() : o.report_path;
    pipeline::write_report(report, report_path);

    std::cout << "processed " << report.images.size() << " images (" << report.ok_count()
              << " ok, " << report.failed_count() << " failed) with " << workers << " workers in "
              << report.total_ms << "ms; report: " << report_path << "\n";
    for (const auto& r : report.images)
        if (!r.ok) std::cerr << "failed: " << r.id << ": " << r.error << "\n";
    return kExitOk;
}

// ------------------------------------------------------------ dataset

int run_dataset(const std::string& manifest, const dataset::DatasetSchema& schema) {
    const auto records = dataset::load_manifest(manifest, schema);
    const auto rep = dataset::split_summary(records, schema);
    std::cout << "schema " << schema.name << ": " << records.size() << " records valid\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "TRAIN %zu (%.2f%%)  TEST %zu (%.2f%%)\n", rep.train_count,
                  rep.train_pct, rep.test_count, rep.test_pct);
    std::cout << buf;
    auto print_hist = [](const char* name, const std::vector<std::size_t>& train,
                         const std::vector<std::size_t>& test) {
        if (train.empty()) return;
        std::cout << name << " per-grade train/test:";
        for (std::size_t g = 0; g < train.size(); ++g)
            std::cout << "  " << g << ": " << train[g] << "/" << test[g];
        std::cout << "\n";
    };
    print_hist("dr", rep.dr_train, rep.dr_test);
    print_hist("dme", rep.dme_train, rep.dme_test);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    return kExitOk;
}

// ------------------------------------------------------------ metrics

int run_metrics(const std::string& predictions, const dataset::DatasetSchema& schema,
                const std::string& average, const std::string& out_path) {
    const auto records = metrics::load_predictions(predictions, schema);
    const auto avg = average == "micro" ? metrics::Average::Micro : metrics::Average::Macro;
    const auto rep = metrics::report(records, schema, avg);

    auto row = [](const char* task, const std::optional<double>& joint,
                  const metrics::TaskMetrics& tm) {
        char buf[160];
        if (joint)
            std::snprintf(buf, sizeof(buf), "%-4s %9.3f %7.3f %7.3f %7.3f %7.3f %7.3f\n", task,
                          *joint, tm.acc, tm.auc, tm.pre, tm.rec, tm.f1);
        else
            std::snprintf(buf, sizeof(buf), "%-4s %9s %7.3f %7.3f %7.3f %7.3f %7.3f\n", task, "-",
                          tm.acc, tm.auc, tm.pre, tm.rec, tm.f1);
        std::cout << buf;
    };
    std::cout << "task  joint_acc     acc     auc     pre     rec      f1\n";
    row("dr", rep.joint_acc, rep.dr);
    if (rep.dme) row("dme", std::nullopt, *rep.dme);

    const std::string json = metrics::report_to_json(rep);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw IoError("cannot write report", out_path);
        out << json;
        std::cout << "report: " << out_path << "\n";
    }
    return kExitOk;
}

// ------------------------------------------------------------ montage

int run_montage(const std::string& input, const std::string& output,
                const std::vector<std::string>& methods) {
    const ImageBuffer img = load_image(input);
    save_image(make_montage(img, methods), output);
    std::cout << "montage (" << methods.size() + 1 << " tiles) -> " << output << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fundus image enhancement and evaluation toolkit"};
    app.require_subcommand(1);

    EnhanceOpts eo;
    auto* enhance = app.add_subcommand("enhance", "apply one enhancement method to an image");
    enhance->add_option("method", eo.method, "green|ben|clahe|greenben|greenclahe")->required();
    enhance->add_option("input", eo.input, "input image (png/jpeg/bmp)")->required();
    enhance->add_option("output", eo.output, "output png")->required();
    enhance->add_option("--sigma", eo.sigma, "gaussian sigma (default: max(w,h)/30)");
    enhance->add_option("--alpha", eo.alpha, "original-image weight");
    enhance->add_option("--beta", eo.beta, "blur weight");
    enhance->add_option("--bias", eo.bias, "additive offset");
    enhance->add_option("--tiles", eo.tiles, "clahe tile grid, e.g. 8x8");
    enhance->add_option("--clip", eo.clip, "clahe clip limit (multiple of uniform bin height)");
    enhance->add_flag("--replicate", eo.replicate, "replicate 1-channel output to RGB");

    PipelineOpts po;
    auto* pl = app.add_subcommand("pipeline", "run a preprocessing pipeline over a manifest");
    pl->add_option("--config", po.config, "pipeline JSON config")->required();
    pl->add_option("--manifest", po.manifest, "csv with id,image_path columns")->required();
    pl->add_option("--out-dir", po.out_dir, "output directory")->required();
    pl->add_option("--report", po.report_path, "report path (default: out-dir/report.jsonl)");
    pl->add_option("--workers", po.workers, "worker threads (default: FUNDUS_WORKERS or cores)");

    std::string ds_manifest, ds_schema = "messidor";
    int ds_dr = 0, ds_dme = 0;
    auto* ds = app.add_subcommand("dataset", "validate a manifest and print split summary");
    ds->add_option("--manifest", ds_manifest, "manifest csv")->required();
    ds->add_option("--schema", ds_schema, "messidor|idrid|deepdrid|custom");
    ds->add_option("--dr-classes", ds_dr, "custom schema DR class count");
    ds->add_option("--dme-classes", ds_dme, "custom schema DME class count (0 = none)");

    std::string mt_predictions, mt_schema = "idrid", mt_average = "macro", mt_out;
    int mt_dr = 0, mt_dme = 0;
    auto* mt = app.add_subcommand("metrics", "score a predictions file");
    mt->add_option("--predictions", mt_predictions, "predictions csv")->required();
    mt->add_option("--schema", mt_schema, "messidor|idrid|deepdrid|custom");
    mt->add_option("--dr-classes", mt_dr, "custom schema DR class count");
    mt->add_option("--dme-classes", mt_dme, "custom schema DME class count (0 = none)");
    mt->add_option("--average", mt_average, "macro|micro")->check(CLI::IsMember({"macro", "micro"}));
    mt->add_option("--out", mt_out, "write the JSON report here");

    std::string mo_input, mo_output;
    std::vector<std::string> mo_methods;
    auto* mo = app.add_subcommand("montage", "side-by-side method comparison image");
    mo->add_option("--input", mo_input, "input image")->required();
    mo->add_option("--output", mo_output, "output png")->required();
    mo->add_option("--methods", mo_methods, "method names, in tile order")
        ->required()
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (enhance->parsed()) return run_enhance(eo);
        if (pl->parsed()) return run_pipeline_cmd(po);
        if (ds->parsed()) return run_dataset(ds_manifest, schema_from_flags(ds_schema, ds_dr, ds_dme));
        if (mt->parsed())
            return run_metrics(mt_predictions, schema_from_flags(mt_schema, mt_dr, mt_dme),
                               mt_average, mt_out);
        if (mo->parsed()) return run_montage(mo_input, mo_output, mo_methods);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const DecodeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
