#include "fundus/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "fundus/csv.hpp"

namespace fundus::dataset {

DatasetSchema DatasetSchema::custom(std::string name, int dr_classes,
                                    std::optional<int> dme_classes) {
    if (dr_classes < 2) throw ValidationError("custom schema requires dr_classes >= 2");
    if (dme_classes && *dme_classes < 2)
        throw ValidationError("custom schema requires dme_classes >= 2 when present");
    return {std::move(name), dr_classes, dme_classes};
}

DatasetSchema DatasetSchema::by_name(const std::string& name) {
    if (name == "messidor") return messidor();
    if (name == "idrid") return idrid();
    if (name == "deepdrid") return deepdrid();
    throw ValidationError("unknown dataset schema '" + name + "' (builtins: messidor, idrid, deepdrid)");
}

std::vector<ManifestRecord> load_manifest(const std::string& path, const DatasetSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest", path);

    const bool want_dme = schema.dme_classes.has_value();
    std::vector<std::string> expected = {"id", "image_path", "dr_grade"};
    if (want_dme) expected.push_back("dme_grade");
    expected.push_back("split");

    int line_no = 0;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("manifest is empty: " + path);
    ++line_no;
    const auto header = csv::split_line(line);
    if (header != expected) {
        std::ostringstream want;
        for (std::size_t i = 0; i < expected.size(); ++i)
            want << (i ? "," : "") << expected[i];
        if (want_dme && header.size() + 1 == expected.size())
            throw ValidationError("schema '" + schema.name +
                                  "' requires a dme_grade column; expected header: " + want.str());
        throw ValidationError("bad manifest header for schema '" + schema.name +
                              "'; expected: " + want.str());
    }

    std::vector<ManifestRecord> records;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = csv::split_line(line);
        if (fields.size() != expected.size())
            throw ValidationError("manifest row " + std::to_string(line_no) + ": expected " +
                                  std::to_string(expected.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        ManifestRecord rec;
        rec.id = fields[0];
        rec.image_path = fields[1];
        if (rec.id.empty())
            throw ValidationError("manifest row " + std::to_string(line_no) + ": empty id");
        if (!seen.insert(rec.id).second)
            throw ValidationError("manifest row " + std::to_string(line_no) + ": duplicate id '" +
                                  rec.id + "'");
        rec.dr_grade = csv::parse_int(fields[2], "dr_grade", line_no);
        if (rec.dr_grade < 0 || rec.dr_grade >= schema.dr_classes)
            throw ValidationError("manifest row " + std::to_string(line_no) + ": dr_grade " +
                                  std::to_string(rec.dr_grade) + " out of range [0," +
                                  std::to_string(schema.dr_classes - 1) + "]");
        std::size_t next = 3;
        if (want_dme) {
            const int g = csv::parse_int(fields[next], "dme_grade", line_no);
            if (g < 0 || g >= *schema.dme_classes)
                throw ValidationError("manifest row " + std::to_string(line_no) + ": dme_grade " +
                                      std::to_string(g) + " out of range [0," +
                                      std::to_string(*schema.dme_classes - 1) + "]");
            rec.dme_grade = g;
            ++next;
        }
        const std::string& split = fields[next];
        if (split == "TRAIN")
            rec.split = Split::Train;
        else if (split == "TEST")
            rec.split = Split::Test;
        else
            throw ValidationError("manifest row " + std::to_string(line_no) +
                                  ": split must be TRAIN or TEST, got '" + split + "'");
        records.push_back(std::move(rec));
    }
    return records;
}

SplitReport split_summary(const std::vector<ManifestRecord>& records,
                          const DatasetSchema& schema) {
    SplitReport rep;
    rep.dr_train.assign(schema.dr_classes, 0);
    rep.dr_test.assign(schema.dr_classes, 0);
    if (schema.dme_classes) {
        rep.dme_train.assign(*schema.dme_classes, 0);
        rep.dme_test.assign(*schema.dme_classes, 0);
    }
    for (const auto& rec : records) {
        const bool train = rec.split == Split::Train;
        (train ? rep.train_count : rep.test_count)++;
        (train ? rep.dr_train : rep.dr_test)[rec.dr_grade]++;
        if (rec.dme_grade) (train ? rep.dme_train : rep.dme_test)[*rec.dme_grade]++;
    }
    const double total = static_cast<double>(records.size());
    if (total > 0) {
        rep.train_pct = 100.0 * rep.train_count / total;
        rep.test_pct = 100.0 * rep.test_count / total;
    }
    if (rep.train_count == 0) rep.warnings.push_back("TRAIN split is empty");
    if (rep.test_count == 0) rep.warnings.push_back("TEST split is empty");
    return rep;
}

} // namespace fundus::dataset
