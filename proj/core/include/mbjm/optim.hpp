#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace mbjm {

struct OptimResult {
    Eigen::VectorXd x;
    double fval = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

struct OptimOptions {
    double rel_grad_tol = 1e-8;
    int max_iterations = 500;
};

// f(x, grad) returns the objective and fills grad. Minimization.
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// BFGS with backtracking Armijo line search.
OptimResult bfgs_minimize(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                          const OptimOptions& opts = {});

// Central-difference gradient wrapper for objectives without analytic gradients.
ObjectiveFn with_numerical_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                    double h = 1e-6);

// Central finite-difference gradient of a scalar function, for gradient checks.
Eigen::VectorXd numerical_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-6);

}  // namespace mbjm
