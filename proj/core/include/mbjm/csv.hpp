#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mbjm/types.hpp"

namespace mbjm {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Column map for the long CSV format (one row per subject-visit).
struct CsvSchema {
    std::string subject_id_col = "subject_id";
    std::string time_col = "time";
    std::string event_time_col = "event_time";
    std::string event_indicator_col = "event_indicator";
    std::vector<std::string> covariate_cols;
    std::vector<BiomarkerSpec> biomarkers;  // name = column name
    double time_rescale = 1.0;              // multiplies time columns at ingestion
};

LongitudinalDataset load_csv_long(const std::string& path, const CsvSchema& schema);
LongitudinalDataset load_csv_long(std::istream& in, const CsvSchema& schema);

// Inverse of load: one row per visit, transforms already applied at load
// time so the export carries the transformed values.
void export_csv_long(const LongitudinalDataset& ds, std::ostream& out);
void export_csv_long(const LongitudinalDataset& ds, const std::string& path);

}  // namespace mbjm
