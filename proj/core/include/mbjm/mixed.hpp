#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mbjm/types.hpp"

namespace mbjm {

// Per-layer fixed/random design metadata. Fixed-effect column order is
// [1, t, V..., Y_1..Y_{m-1}, g(Ttilde)]; the g column is dropped in LTS designs.
struct LayerDesign {
    int layer = 1;         // m, 1-based
    int n_covariates = 0;  // dim(V)
    int n_prev = 0;        // previous-layer columns (m-1)
    bool has_g_column = true;
    bool random_slope = false;
    GTransform g = GTransform::Identity;

    int fixed_dim() const { return 2 + n_covariates + n_prev + (has_g_column ? 1 : 0); }
    int random_dim() const { return random_slope ? 2 : 1; }
    std::vector<std::string> column_names(const std::vector<std::string>& covariate_names,
                                          const std::vector<std::string>& prev_names) const;
};

// One subject's rows for a single layer.
struct SubjectRows {
    Eigen::MatrixXd X;  // n_i x p fixed design
    Eigen::MatrixXd U;  // n_i x q random design
    Eigen::VectorXd y;  // outcome
};

struct LmmFit {
    Eigen::VectorXd beta;
    Eigen::MatrixXd omega;  // q x q random-effect covariance, PSD
    double sigma2 = 1.0;    // residual variance
    double loglik = 0.0;
    std::vector<std::string> warnings;
};

struct GlmmFit {
    Eigen::VectorXd beta;
    Eigen::MatrixXd omega;
    double loglik = 0.0;
    std::vector<std::string> warnings;
};

// Closed-form marginal Gaussian log-likelihood, covariance sigma2*I + U Omega U^T.
double marginal_loglik_lmm(const LmmFit& fit, const SubjectRows& rows);

// Log of the adaptive Gauss-Hermite integral over the random effects for
// one subject under a Bernoulli-logit model, Q nodes per dimension.
double marginal_loglik_glmm(const GlmmFit& fit, const SubjectRows& rows, int Q);

// Packed-parameter LMM objective for gradient checks: theta =
// [beta, log sigma_e, cholesky(Omega) params]. Returns total loglik over
// subjects; fills analytic gradient when grad != nullptr.
double lmm_loglik_packed(const Eigen::VectorXd& theta, const std::vector<SubjectRows>& data,
                         int p, int q, Eigen::VectorXd* grad = nullptr);

// Packed GLMM objective, theta = [beta, cholesky(Omega) params]. When
// grad != nullptr, fills the score approximated as the posterior expectation
// of the complete-data score on the same quadrature nodes.
double glmm_loglik_packed(const Eigen::VectorXd& theta, const std::vector<SubjectRows>& data,
                          int p, int q, int Q, Eigen::VectorXd* grad = nullptr);

// ML fit (not REML). Quasi-Newton on the packed parameterization.
LmmFit fit_lmm(const std::vector<SubjectRows>& data, const LayerDesign& design);
GlmmFit fit_glmm(const std::vector<SubjectRows>& data, const LayerDesign& design, int Q);

}  // namespace mbjm
