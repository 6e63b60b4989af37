#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mbjm/engine.hpp"
#include "mbjm/metrics.hpp"
#include "mbjm/spm.hpp"

namespace mbjm {

// Flattened (name, value) view of all MBJM parameters: survival shape and
// coefficients, then per-layer fixed effects, variance components, and LTS
// layers when present. Order is stable across refits of the same config.
std::vector<std::pair<std::string, double>> flatten_parameters(const FittedMbjm& model);

// Inverse of flatten_parameters: writes a replicate parameter vector back
// into a model skeleton of the same configuration.
void apply_parameters(FittedMbjm& model, const std::vector<double>& values);

struct CvOptions {
    int k = 5;
    std::vector<double> landmarks = {1.0, 3.0, 5.0};
    std::vector<double> horizons = {1.0, 3.0};
    std::uint64_t seed = 2024;
    int n_threads = 0;
    bool use_ipcw = true;  // weight validation subjects censored in-window
};

struct CvResult {
    AccuracyReport mbjm;
    AccuracyReport spm;
    std::vector<std::string> fold_warnings;
    int folds_used = 0;
};

// k-fold CV: fit MBJM and SPM on k-1 folds, score held-out at-risk subjects
// with history truncated at each landmark, aggregate across folds.
CvResult cross_validate(const LongitudinalDataset& ds, const ModelConfig& config,
                        const CvOptions& opts);

// Scores a fitted model pair on an external validation set (no censoring
// handling needed when the validation data are uncensored).
struct ExternalEval {
    AccuracyReport mbjm;
    AccuracyReport spm;
};
ExternalEval evaluate_external(const FittedMbjm& model, const SpmModel& spm,
                               const LongitudinalDataset& validation,
                               const std::vector<double>& landmarks,
                               const std::vector<double>& horizons, bool use_ipcw,
                               int n_threads = 0);

struct BootstrapResult {
    std::vector<std::string> parameter_names;
    std::vector<std::vector<double>> replicates;  // B x P (failed reps dropped)
    std::vector<double> point_estimate;
    std::vector<double> standard_error;  // sample SD over replicates
    std::size_t n_failed = 0;
    bool se_defined = true;  // false when B - failures < 2
};

// Subject-level resampling with replacement; full MBJM refit per replicate.
BootstrapResult bootstrap_fit(const LongitudinalDataset& ds, const ModelConfig& config, int B,
                              std::uint64_t seed, int n_threads = 0);

}  // namespace mbjm
