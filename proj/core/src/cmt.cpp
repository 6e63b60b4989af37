#include "mbjm/cmt.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mbjm {

std::string CmtTable::to_csv() const {
    std::ostringstream os;
    os << "stratum,bin_start,mean,count\n";
    for (const auto& b : bins) {
        os << b.stratum << "," << b.bin_start << ",";
        if (b.count > 0) os << b.mean;
        else os << "NA";
        os << "," << b.count << "\n";
    }
    return os.str();
}

CmtTable conditional_mean_trajectory(const LongitudinalDataset& ds,
                                     const std::string& biomarker,
                                     const std::vector<int>& strata, double bin_width) {
    int bio = -1;
    for (std::size_t m = 0; m < ds.biomarker_specs.size(); ++m)
        if (ds.biomarker_specs[m].name == biomarker) bio = (int)m;
    if (bio < 0) throw std::invalid_argument("unknown biomarker: " + biomarker);

    CmtTable table;
    table.biomarker = biomarker;
    table.bin_width = bin_width;

    for (int year : strata) {
        // (bin index) -> (sum, count)
        std::map<int, std::pair<double, std::size_t>> acc;
        int max_bin = 0;
        for (const auto& s : ds.subjects) {
            if (s.event_indicator != 1) continue;
            if ((int)std::floor(s.observed_time) != year) continue;
            for (const auto& v : s.visits) {
                if (!v.values[bio]) continue;
                const int bin = (int)std::floor(v.time / bin_width);
                acc[bin].first += *v.values[bio];
                acc[bin].second += 1;
                max_bin = std::max(max_bin, bin);
            }
        }
        if (acc.empty()) {
            table.bins.push_back({year, 0.0, 0.0, 0});
            continue;
        }
        for (int bin = 0; bin <= max_bin; ++bin) {
            auto it = acc.find(bin);
            CmtBin out;
            out.stratum = year;
            out.bin_start = bin * bin_width;
            if (it != acc.end() && it->second.second > 0) {
                out.mean = it->second.first / (double)it->second.second;
                out.count = it->second.second;
            }
            table.bins.push_back(out);
        }
    }
    return table;
}

}  // namespace mbjm
