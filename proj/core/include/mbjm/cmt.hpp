#pragma once

#include <string>
#include <vector>

#include "mbjm/types.hpp"

namespace mbjm {

// Conditional mean trajectory: biomarker means over monthly (or custom) time
// bins, within strata of subjects who reached the event in a given year.
struct CmtBin {
    int stratum = 0;        // event-year stratum (floor of Ttilde)
    double bin_start = 0.0;
    double mean = 0.0;
    std::size_t count = 0;
};

struct CmtTable {
    std::string biomarker;
    double bin_width = 1.0 / 12.0;
    std::vector<CmtBin> bins;
    std::string to_csv() const;
};

// strata: event-year values to aggregate (subjects with floor(T) == year and
// an observed event). Empty strata are emitted with count 0.
CmtTable conditional_mean_trajectory(const LongitudinalDataset& ds,
                                     const std::string& biomarker,
                                     const std::vector<int>& strata,
                                     double bin_width = 1.0 / 12.0);

}  // namespace mbjm
