#include "mbjm/optim.hpp"

#include <cmath>

namespace mbjm {

OptimResult bfgs_minimize(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                          const OptimOptions& opts) {
    const int n = (int)x0.size();
    Eigen::VectorXd x = x0, g(n), g_new(n);
    Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
    double fx = f(x, g);

    OptimResult res;
    const double gscale0 = std::max(1.0, g.norm());

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        const double gnorm = g.norm();
        res.iterations = iter;
        res.grad_norm = gnorm;
        if (gnorm / std::max(1.0, std::abs(fx)) < opts.rel_grad_tol ||
            gnorm < opts.rel_grad_tol * gscale0) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd d = -Hinv * g;
        double slope = g.dot(d);
        if (!(slope < 0)) {  // reset on loss of descent direction
            Hinv.setIdentity();
            d = -g;
            slope = g.dot(d);
        }

        // backtracking Armijo
        double step = 1.0;
        double f_new = 0.0;
        Eigen::VectorXd x_new;
        bool ok = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * d;
            f_new = f(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) {
            res.message = "line search failed";
            break;
        }

        Eigen::VectorXd s = x_new - x;
        Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) +
                   rho * s * s.transpose();
        }
        x = std::move(x_new);
        g = g_new;
        fx = f_new;
    }

    res.x = x;
    res.fval = fx;
    res.grad_norm = g.norm();
    if (!res.converged && res.message.empty()) res.message = "max iterations reached";
    return res;
}

ObjectiveFn with_numerical_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                    double h) {
    return [f, h](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        grad = numerical_gradient(f, x, h);
        return f(x);
    };
}

Eigen::VectorXd numerical_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (int i = 0; i < x.size(); ++i) {
        const double hi = h * std::max(1.0, std::abs(x(i)));
        xp(i) = x(i) + hi;
        const double fp = f(xp);
        xp(i) = x(i) - hi;
        const double fm = f(xp);
        xp(i) = x(i);
        g(i) = (fp - fm) / (2.0 * hi);
    }
    return g;
}

}  // namespace mbjm
