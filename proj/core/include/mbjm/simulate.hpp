#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mbjm/engine.hpp"
#include "mbjm/types.hpp"

namespace mbjm {

// Ground truth for one longitudinal layer. beta follows the layer design
// column order [1, t, V..., Y_prev..., g(T)]; lts_beta drops the g column.
struct LayerTruth {
    bool categorical = false;
    Eigen::VectorXd beta;
    double omega2 = 0.25;
    double sigma2 = 0.25;  // continuous layers only
    Eigen::VectorXd lts_beta;  // TP only
    double lts_omega2 = 0.25;
    double lts_sigma2 = 0.25;
};

struct SimScenario {
    enum class Kind { MbjmEx, MbjmTp, Sjm };
    Kind kind = Kind::MbjmEx;
    int n = 500;
    std::uint64_t seed = 1;

    double weibull_shape = 1.4;
    Eigen::VectorXd weibull_gamma;  // [g0, gV...] on the log-scale parameter

    std::vector<LayerTruth> layers;  // layer order; SJM uses beta w/o prev or g cols
    Eigen::VectorXd sjm_association;  // alpha_m, SJM only

    double target_censoring = 0.45;  // in (0,1)
    double tau_max = std::numeric_limits<double>::infinity();
    GTransform g_transform = GTransform::Identity;

    double visit_spacing = 0.35;
    double visit_jitter = 0.1;
    double max_followup = 25.0;  // visit schedule cap

    // PBC-like defaults: 2 covariates, 7 biomarkers (2 categorical, 5 continuous)
    static SimScenario default_mbjm_ex(int n, std::uint64_t seed);
    static SimScenario default_mbjm_tp(int n, std::uint64_t seed);
    static SimScenario default_sjm(int n, std::uint64_t seed);

    ModelConfig model_config() const;
};

struct SimData {
    LongitudinalDataset training;    // target censoring rate
    LongitudinalDataset validation;  // uncensored
    double realized_censoring = 0.0;
    double realized_tau_censoring = 0.0;  // TP: fraction censored at tau_max
};

SimData generate_mbjm_data(const SimScenario& sc);
SimData generate_sjm_data(const SimScenario& sc);
SimData generate_data(const SimScenario& sc);

// True parameter vector in the exact order of flatten_parameters() applied
// to a model fitted with sc.model_config().
std::vector<std::pair<std::string, double>> true_parameters(const SimScenario& sc);

struct BiasRow {
    std::string name;
    double truth = 0.0;
    double mean_estimate = 0.0;
    bool percent_scale = false;  // true when |truth| >= 0.1
    double bias = 0.0;           // percent bias or absolute bias
};

struct BiasTable {
    int n = 0;
    int reps = 0;
    int failures = 0;
    std::vector<BiasRow> rows;
    std::string to_csv() const;
};

std::vector<BiasTable> bias_experiment(const SimScenario& sc, const std::vector<int>& n_grid,
                                       int reps, int n_threads = 0);

struct TimingRow {
    int n = 0;
    double mean_seconds = 0.0;
    int converged = 0;
    int reps = 0;
};

std::vector<TimingRow> timing_benchmark(const SimScenario& sc, const std::vector<int>& n_grid,
                                        int reps);

// Monte Carlo risk under the true SJM generative model: integrates the
// shared random effects against the subject's history by importance
// sampling from the prior. Used as the oracle comparator.
double sjm_oracle_risk(const SimScenario& sc, const RiskQuery& query, int n_draws,
                       std::uint64_t seed);

}  // namespace mbjm
