#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mbjm/mixed.hpp"
#include "mbjm/types.hpp"
#include "mbjm/weibull.hpp"

namespace mbjm {

// One longitudinal layer: either a linear or a logistic mixed model.
struct LayerFit {
    LayerDesign design;
    bool is_glmm = false;
    LmmFit lmm;
    GlmmFit glmm;

    double marginal_loglik(const SubjectRows& rows, int Q) const {
        return is_glmm ? marginal_loglik_glmm(glmm, rows, Q) : marginal_loglik_lmm(lmm, rows);
    }
};

struct FittedMbjm {
    WeibullModel survival;
    std::vector<LayerFit> layers;      // one per biomarker, layer order
    std::vector<LayerFit> lts_layers;  // TP only, g(T) column dropped
    ModelConfig config;
    // biomarker index (into dataset specs) per layer position
    std::vector<int> layer_to_biomarker;
    std::vector<std::string> covariate_names;
    std::vector<std::string> layer_names;
    std::size_t unified_group_size = 0;
    std::size_t lts_count = 0;
};

struct RiskQuery {
    Eigen::VectorXd covariates;  // V
    std::vector<double> visit_times;
    // visit x layer-position values; layer order must match the fitted model
    std::vector<std::vector<double>> visit_values;
    double s = 0.0;      // prediction time; all visit times <= s
    double horizon = 0.0;  // Delta > 0

    void check() const;
};

struct RiskResult {
    double risk = 0.0;  // P(event in (s, s+Delta] | history, at risk at s)
    double numerator_log = 0.0;
    double denominator_log = 0.0;
    int nodes_used = 0;
};

struct UnifiedGroup {
    std::vector<std::size_t> non_lts;  // event subjects with T <= tau_max
    std::vector<std::size_t> lts;      // Ttilde > tau_max (TP only)
    std::vector<std::size_t> all() const;
};

// Subjects with Delta_i = 1: observed events plus, under TP, those followed
// to or past tau_max.
UnifiedGroup select_unified_group(const LongitudinalDataset& ds, const ModelConfig& config);

// Two-step CCA fit: survival on everyone, layer models on the unified group.
FittedMbjm fit_mbjm(const LongitudinalDataset& ds, const ModelConfig& config);

// Sum over layers of the marginal log-likelihood of the query history given a
// candidate survival time u (g(u) enters each non-LTS layer design).
double trajectory_loglik(const FittedMbjm& model, const RiskQuery& query, double u);
// Same, against the LTS layer models (no survival-time column).
double trajectory_loglik_lts(const FittedMbjm& model, const RiskQuery& query);

RiskResult dynamic_risk(const FittedMbjm& model, const RiskQuery& query);

struct RiskPoint {
    double s = 0.0;
    double risk = 0.0;
};

// dynamic_risk at each visit time, history truncated at that visit.
std::vector<RiskPoint> risk_trajectory(const FittedMbjm& model,
                                       const Eigen::VectorXd& covariates,
                                       const std::vector<double>& visit_times,
                                       const std::vector<std::vector<double>>& visit_values,
                                       double horizon);

// Builds a RiskQuery from a subject record, history truncated at time s.
// Layer values are reordered from biomarker-spec order to layer order.
RiskQuery make_query(const FittedMbjm& model, const SubjectRecord& subject, double s,
                     double horizon);

}  // namespace mbjm
