#pragma once

#include <Eigen/Dense>

#include "mbjm/types.hpp"
#include "mbjm/weibull.hpp"

namespace mbjm {

// Static prediction model: Weibull regression of Ttilde on [V, Y(0)] where
// Y(0) is the earliest visit's biomarker vector. At prediction time it is
// applied to the time-s values, ignoring at-risk conditioning and history.
struct SpmModel {
    WeibullModel weibull;
    int n_covariates = 0;
    int n_biomarkers = 0;
    std::size_t n_excluded = 0;  // subjects without a usable baseline visit
};

SpmModel fit_spm(const LongitudinalDataset& ds);

// 1 - S(Delta | [V, current_values]).
double spm_predict(const SpmModel& m, const Eigen::VectorXd& covariates,
                   const Eigen::VectorXd& current_values, double horizon);

// Last-observation-carried-forward current values at time s, in biomarker-spec
// order. Returns false when no complete visit at or before s exists.
bool spm_current_values(const SubjectRecord& subject, double s, Eigen::VectorXd& out);

}  // namespace mbjm
