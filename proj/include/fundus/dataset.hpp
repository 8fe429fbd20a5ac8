#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fundus/error.hpp"

namespace fundus::dataset {

/// Class-count schema for a grading dataset. dme_classes is empty for
/// datasets graded on retinopathy severity only.
struct DatasetSchema {
    std::string name;
    int dr_classes = 0;
    std::optional<int> dme_classes;

    static DatasetSchema messidor() { return {"messidor", 4, 3}; }
    static DatasetSchema idrid() { return {"idrid", 5, 3}; }
    static DatasetSchema deepdrid() { return {"deepdrid", 5, std::nullopt}; }
    static DatasetSchema custom(std::string name, int dr_classes,
                                std::optional<int> dme_classes = std::nullopt);
    /// Resolves one of the builtin names above; unknown -> ValidationError.
    static DatasetSchema by_name(const std::string& name);
};

enum class Split { Train, Test };

struct ManifestRecord {
    std::string id;
    std::string image_path;
    int dr_grade = 0;
    std::optional<int> dme_grade;
    Split split = Split::Train;
};

/// Comma-delimited manifest with header id,image_path,dr_grade[,dme_grade],split.
/// The dme_grade column must be present exactly when the schema defines DME
/// classes. Grades are range-checked, duplicate ids rejected, order preserved.
std::vector<ManifestRecord> load_manifest(const std::string& path, const DatasetSchema& schema);

struct SplitReport {
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    double train_pct = 0.0;
    double test_pct = 0.0;
    // histograms indexed by grade, one per split
    std::vector<std::size_t> dr_train, dr_test;
    std::vector<std::size_t> dme_train, dme_test; // empty without DME grades
    std::vector<std::string> warnings;
};

SplitReport split_summary(const std::vector<ManifestRecord>& records, const DatasetSchema& schema);

} // namespace fundus::dataset
