#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mbjm/types.hpp"

namespace mbjm {

struct Violation {
    std::string invariant;
    std::string subject_id;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    std::size_t n_subjects_checked = 0;
    bool clean() const { return violations.empty(); }
    std::size_t count(const std::string& invariant) const;
    std::string summary() const;
};

// Pure report; never mutates the dataset.
ValidationReport validate_dataset(const LongitudinalDataset& ds);

struct FoldSplit {
    // fold assignment per subject index; folds are subject-level
    std::vector<int> assignment;
    int k = 0;
    std::vector<std::size_t> train_indices(int fold) const;
    std::vector<std::size_t> test_indices(int fold) const;
};

FoldSplit split_folds(const LongitudinalDataset& ds, int k, std::uint64_t seed);

LongitudinalDataset subset(const LongitudinalDataset& ds, const std::vector<std::size_t>& idx);

}  // namespace mbjm
