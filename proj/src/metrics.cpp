#include "fundus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fundus/csv.hpp"

namespace fundus::metrics {

namespace {

const std::vector<double>& task_prob(const PredictionRecord& r, Task task) {
    return task == Task::DR ? r.prob_dr : r.prob_dme;
}

int task_label(const PredictionRecord& r, Task task) {
    if (task == Task::DR) return r.true_dr;
    if (!r.true_dme) throw ContractError("record '" + r.id + "' has no DME prediction");
    return *r.true_dme;
}

void require_task(const std::vector<PredictionRecord>& records, Task task) {
    if (task == Task::DME)
        for (const auto& r : records)
            if (!r.true_dme || r.prob_dme.empty())
                throw ContractError("record '" + r.id + "' has no DME prediction");
}

} // namespace

std::size_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

int argmax_class(const std::vector<double>& prob) {
    if (prob.empty()) throw ContractError("argmax of an empty probability vector");
    return static_cast<int>(std::max_element(prob.begin(), prob.end()) - prob.begin());
}

ConfusionMatrix confusion(const std::vector<PredictionRecord>& records, Task task, int classes) {
    if (classes < 2) throw ContractError("confusion requires >= 2 classes");
    require_task(records, task);
    ConfusionMatrix cm;
    cm.k = classes;
    cm.counts.assign(static_cast<std::size_t>(classes) * classes, 0);
    for (const auto& r : records) {
        const int t = task_label(r, task);
        const int p = argmax_class(task_prob(r, task));
        if (t < 0 || t >= classes || p >= classes)
            throw ContractError("record '" + r.id + "' label or prediction out of range");
        ++cm.at(t, p);
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    if (total == 0) throw ContractError("accuracy of an empty confusion matrix");
    std::size_t trace = 0;
    for (int c = 0; c < cm.k; ++c) trace += cm.at(c, c);
    return static_cast<double>(trace) / static_cast<double>(total);
}

PrfResult precision_recall_f1(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw ContractError("metrics of an empty confusion matrix");
    PrfResult out;
    out.precision.resize(cm.k);
    out.recall.resize(cm.k);
    out.f1.resize(cm.k);
    out.degenerate.assign(cm.k, false);
    for (int c = 0; c < cm.k; ++c) {
        std::size_t tp = cm.at(c, c), fp = 0, fn = 0;
        for (int o = 0; o < cm.k; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);
            fn += cm.at(c, o);
        }
        const double denom_p = static_cast<double>(tp + fp);
        const double denom_r = static_cast<double>(tp + fn);
        const double denom_f = static_cast<double>(2 * tp + fn + fp);
        if (denom_p == 0 || denom_r == 0 || denom_f == 0) out.degenerate[c] = true;
        out.precision[c] = denom_p == 0 ? 0.0 : tp / denom_p;
        out.recall[c] = denom_r == 0 ? 0.0 : tp / denom_r;
        out.f1[c] = denom_f == 0 ? 0.0 : 2.0 * tp / denom_f;
    }
    out.macro_precision = std::accumulate(out.precision.begin(), out.precision.end(), 0.0) / cm.k;
    out.macro_recall = std::accumulate(out.recall.begin(), out.recall.end(), 0.0) / cm.k;
    out.macro_f1 = std::accumulate(out.f1.begin(), out.f1.end(), 0.0) / cm.k;
    return out;
}

namespace {

// Binary AUC of score-vs-membership via rank sums with midranks for ties.
double binary_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = (static_cast<double>(i) + j) / 2.0 + 1.0; // 1-based
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = midrank;
        i = j + 1;
    }
    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t k = 0; k < n; ++k)
        if (positive[k]) {
            pos_rank_sum += rank[k];
            ++n_pos;
        }
    const std::size_t n_neg = n - n_pos;
    return (pos_rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0) /
           (static_cast<double>(n_pos) * n_neg);
}

} // namespace

AucResult auc_ovr_macro(const std::vector<PredictionRecord>& records, Task task, int classes) {
    require_task(records, task);
    if (records.empty()) throw ContractError("auc of an empty record set");
    std::unordered_set<int> distinct;
    for (const auto& r : records) distinct.insert(task_label(r, task));
    if (distinct.size() < 2)
        throw ContractError("auc undefined: only one true class present");

    AucResult out;
    out.per_class.assign(classes, std::numeric_limits<double>::quiet_NaN());
    double sum = 0.0;
    int used = 0;
    for (int c = 0; c < classes; ++c) {
        std::vector<double> scores;
        std::vector<bool> positive;
        scores.reserve(records.size());
        for (const auto& r : records) {
            scores.push_back(task_prob(r, task).at(c));
            positive.push_back(task_label(r, task) == c);
        }
        const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
        if (n_pos == 0 || n_pos == records.size()) {
            out.skipped.push_back(c);
            continue;
        }
        const double auc = binary_auc(scores, positive);
        out.per_class[c] = auc;
        sum += auc;
        ++used;
    }
    out.macro = sum / used;
    return out;
}

double joint_accuracy(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw ContractError("joint accuracy of an empty record set");
    require_task(records, Task::DME);
    std::size_t both = 0;
    for (const auto& r : records) {
        const bool dr_ok = argmax_class(r.prob_dr) == r.true_dr;
        const bool dme_ok = argmax_class(r.prob_dme) == *r.true_dme;
        if (dr_ok && dme_ok) ++both;
    }
    return static_cast<double>(both) / static_cast<double>(records.size());
}

namespace {

TaskMetrics task_metrics(const std::vector<PredictionRecord>& records, Task task, int classes,
                         Average average) {
    TaskMetrics tm;
    const ConfusionMatrix cm = confusion(records, task, classes);
    tm.acc = accuracy(cm);
    tm.prf = precision_recall_f1(cm);
    if (average == Average::Macro) {
        tm.pre = tm.prf.macro_precision;
        tm.rec = tm.prf.macro_recall;
        tm.f1 = tm.prf.macro_f1;
    } else {
        // Micro: global one-vs-rest tallies. For single-label multi-class
        // classification micro precision = micro recall = accuracy.
        std::size_t tp = 0, fp = 0, fn = 0;
        for (int c = 0; c < cm.k; ++c) {
            tp += cm.at(c, c);
            for (int o = 0; o < cm.k; ++o) {
                if (o == c) continue;
                fp += cm.at(o, c);
                fn += cm.at(c, o);
            }
        }
        tm.pre = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
        tm.rec = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
        tm.f1 = 2 * tp + fn + fp == 0 ? 0.0 : 2.0 * tp / static_cast<double>(2 * tp + fn + fp);
    }
    tm.auc_detail = auc_ovr_macro(records, task, classes);
    tm.auc = tm.auc_detail.macro;
    return tm;
}

nlohmann::ordered_json task_json(const TaskMetrics& tm) {
    nlohmann::ordered_json j;
    j["acc"] = tm.acc;
    j["auc"] = tm.auc;
    j["pre"] = tm.pre;
    j["rec"] = tm.rec;
    j["f1"] = tm.f1;
    j["per_class"] = {{"pre", tm.prf.precision}, {"rec", tm.prf.recall}, {"f1", tm.prf.f1}};
    nlohmann::ordered_json auc_pc = nlohmann::ordered_json::array();
    for (double v : tm.auc_detail.per_class) {
        if (std::isnan(v))
            auc_pc.push_back(nullptr);
        else
            auc_pc.push_back(v);
    }
    j["per_class"]["auc"] = auc_pc;
    std::vector<int> degenerate;
    for (std::size_t c = 0; c < tm.prf.degenerate.size(); ++c)
        if (tm.prf.degenerate[c]) degenerate.push_back(static_cast<int>(c));
    j["degenerate_classes"] = degenerate;
    j["auc_skipped_classes"] = tm.auc_detail.skipped;
    return j;
}

} // namespace

MetricsReport report(const std::vector<PredictionRecord>& records,
                     const dataset::DatasetSchema& schema, Average average) {
    if (records.empty()) throw ContractError("report of an empty record set");
    MetricsReport rep;
    rep.average = average;
    rep.dr = task_metrics(records, Task::DR, schema.dr_classes, average);
    const bool has_dme = schema.dme_classes.has_value();
    if (has_dme) {
        rep.dme = task_metrics(records, Task::DME, *schema.dme_classes, average);
        rep.joint_acc = joint_accuracy(records);
    }
    return rep;
}

std::string report_to_json(const MetricsReport& rep) {
    nlohmann::ordered_json j;
    j["average"] = rep.average == Average::Macro ? "macro" : "micro";
    if (rep.joint_acc) j["joint_acc"] = *rep.joint_acc;
    j["dr"] = task_json(rep.dr);
    if (rep.dme) j["dme"] = task_json(*rep.dme);
    return j.dump(2) + "\n";
}

std::vector<PredictionRecord> load_predictions(const std::string& path,
                                               const dataset::DatasetSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open predictions", path);

    const int k = schema.dr_classes;
    const bool want_dme = schema.dme_classes.has_value();
    const int m = want_dme ? *schema.dme_classes : 0;

    std::vector<std::string> expected = {"id", "true_dr"};
    for (int i = 0; i < k; ++i) expected.push_back("p_dr_" + std::to_string(i));
    if (want_dme) {
        expected.push_back("true_dme");
        for (int i = 0; i < m; ++i) expected.push_back("p_dme_" + std::to_string(i));
    }

    int line_no = 0;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("predictions file is empty: " + path);
    ++line_no;
    if (csv::split_line(line) != expected) {
        std::ostringstream want;
        for (std::size_t i = 0; i < expected.size(); ++i)
            want << (i ? "," : "") << expected[i];
        throw ValidationError("bad predictions header for schema '" + schema.name +
                              "'; expected: " + want.str());
    }

    auto read_dist = [&](const std::vector<std::string>& fields, std::size_t start, int count,
                         const char* what) {
        std::vector<double> prob(count);
        double sum = 0.0;
        for (int i = 0; i < count; ++i) {
            prob[i] = csv::parse_double(fields[start + i], what, line_no);
            if (prob[i] < 0.0)
                throw ValidationError("row " + std::to_string(line_no) + ": negative probability");
            sum += prob[i];
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw ValidationError("row " + std::to_string(line_no) + ": " + what +
                                  " probabilities sum to " + std::to_string(sum) + ", expected 1");
        return prob;
    };

    std::vector<PredictionRecord> records;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = csv::split_line(line);
        if (fields.size() != expected.size())
            throw ValidationError("row " + std::to_string(line_no) + ": expected " +
                                  std::to_string(expected.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        PredictionRecord rec;
        rec.id = fields[0];
        if (!seen.insert(rec.id).second)
            throw ValidationError("row " + std::to_string(line_no) + ": duplicate id '" + rec.id +
                                  "'");
        rec.true_dr = csv::parse_int(fields[1], "true_dr", line_no);
        if (rec.true_dr < 0 || rec.true_dr >= k)
            throw ValidationError("row " + std::to_string(line_no) + ": true_dr out of range");
        rec.prob_dr = read_dist(fields, 2, k, "dr");
        if (want_dme) {
            const int t = csv::parse_int(fields[2 + k], "true_dme", line_no);
            if (t < 0 || t >= m)
                throw ValidationError("row " + std::to_string(line_no) + ": true_dme out of range");
            rec.true_dme = t;
            rec.prob_dme = read_dist(fields, 3 + k, m, "dme");
        }
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw ValidationError("predictions file has no data rows: " + path);
    return records;
}

} // namespace fundus::metrics
