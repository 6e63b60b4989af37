#pragma once

#include <Eigen/Dense>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbjm/types.hpp"

namespace mbjm {

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Weibull regression on the log-scale parameter:
//   S(t | x) = exp(-(t / scale(x))^k),  scale(x) = exp(gamma^T x)
// where x carries a leading intercept.
struct WeibullModel {
    double shape = 1.0;               // k
    Eigen::VectorXd coefficients;     // gamma, first entry = intercept
    std::vector<std::string> covariate_names;
    double loglik = 0.0;

    double scale(const Eigen::VectorXd& covariates) const;  // covariates = V, no intercept
    double survival(double t, const Eigen::VectorXd& covariates) const;
    double density(double t, const Eigen::VectorXd& covariates) const;
    double log_density(double t, const Eigen::VectorXd& covariates) const;
    double hazard(double t, const Eigen::VectorXd& covariates) const;
    double quantile(double p, const Eigen::VectorXd& covariates) const;  // S^{-1}
    double sample(const Eigen::VectorXd& covariates, std::mt19937_64& rng) const;
};

// Right-censored Weibull log-likelihood and analytic gradient at
// params = (log k, gamma). X rows carry the intercept column.
double weibull_loglik(const Eigen::VectorXd& params, const Eigen::VectorXd& t,
                      const Eigen::VectorXi& delta, const Eigen::MatrixXd& X,
                      Eigen::VectorXd* grad = nullptr, Eigen::MatrixXd* hess = nullptr);

// Damped Newton MLE. X must include the intercept column and be full rank.
WeibullModel fit_weibull(const Eigen::VectorXd& t, const Eigen::VectorXi& delta,
                         const Eigen::MatrixXd& X, std::vector<std::string> names = {});

// Fits T on [1, V] over all subjects; censoring enters the likelihood.
WeibullModel fit_parametric_survival(const LongitudinalDataset& ds);

}  // namespace mbjm
