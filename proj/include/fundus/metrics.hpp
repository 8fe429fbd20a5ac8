#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fundus/dataset.hpp"
#include "fundus/error.hpp"

namespace fundus::metrics {

enum class Task { DR, DME };
enum class Average { Macro, Micro };

/// One scored sample: true labels plus predicted class-probability vectors.
/// The DME pair is absent for single-task predictions.
struct PredictionRecord {
    std::string id;
    int true_dr = 0;
    std::vector<double> prob_dr;
    std::optional<int> true_dme;
    std::vector<double> prob_dme;
};

struct ConfusionMatrix {
    int k = 0;
    std::vector<std::size_t> counts; // row = true class, col = predicted

    std::size_t& at(int t, int p) { return counts[static_cast<std::size_t>(t) * k + p]; }
    std::size_t at(int t, int p) const { return counts[static_cast<std::size_t>(t) * k + p]; }
    std::size_t total() const;
};

/// Predicted class = argmax of the probability vector, ties broken toward
/// the lowest class index.
int argmax_class(const std::vector<double>& prob);

ConfusionMatrix confusion(const std::vector<PredictionRecord>& records, Task task, int classes);

double accuracy(const ConfusionMatrix& cm);

struct PrfResult {
    std::vector<double> precision, recall, f1;   // per class
    std::vector<bool> degenerate;                // zero-denominator classes
    double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
};

/// One-vs-rest per class; macro values are unweighted means over all
/// classes, with zero-denominator classes contributing 0.
PrfResult precision_recall_f1(const ConfusionMatrix& cm);

struct AucResult {
    std::vector<double> per_class;   // NaN for skipped classes
    std::vector<int> skipped;        // classes lacking positives or negatives
    double macro = 0;
};

/// One-vs-rest AUC via the rank (Mann-Whitney) formulation with midrank tie
/// handling, macro-averaged over classes that have both positives and
/// negatives. Throws when fewer than two distinct true classes are present.
AucResult auc_ovr_macro(const std::vector<PredictionRecord>& records, Task task, int classes);

/// Fraction of records whose DR and DME argmax predictions are both correct.
double joint_accuracy(const std::vector<PredictionRecord>& records);

struct TaskMetrics {
    double acc = 0, auc = 0, pre = 0, rec = 0, f1 = 0;
    PrfResult prf;
    AucResult auc_detail;
};

struct MetricsReport {
    std::optional<double> joint_acc;
    TaskMetrics dr;
    std::optional<TaskMetrics> dme;
    Average average = Average::Macro;
};

MetricsReport report(const std::vector<PredictionRecord>& records,
                     const dataset::DatasetSchema& schema, Average average = Average::Macro);

/// JSON rendering with a fixed key order, stable byte-for-byte across runs.
std::string report_to_json(const MetricsReport& rep);

/// Comma-delimited predictions, header
/// id,true_dr,p_dr_0..p_dr_{k-1}[,true_dme,p_dme_0..p_dme_{m-1}].
/// Probability vectors must be non-negative and sum to 1 within 1e-6.
std::vector<PredictionRecord> load_predictions(const std::string& path,
                                               const dataset::DatasetSchema& schema);

} // namespace fundus::metrics
