#include "mbjm/weibull.hpp"

#include <cmath>

namespace mbjm {

double WeibullModel::scale(const Eigen::VectorXd& covariates) const {
    double eta = coefficients(0);
    for (int i = 0; i < covariates.size(); ++i) eta += coefficients(i + 1) * covariates(i);
    return std::exp(eta);
}

double WeibullModel::survival(double t, const Eigen::VectorXd& covariates) const {
    if (t < 0) throw std::invalid_argument("survival: t must be >= 0");
    return std::exp(-std::pow(t / scale(covariates), shape));
}

double WeibullModel::log_density(double t, const Eigen::VectorXd& covariates) const {
    if (t <= 0) throw std::invalid_argument("density: t must be > 0");
    const double lam = scale(covariates);
    const double w = std::log(t) - std::log(lam);
    return std::log(shape) - std::log(lam) + (shape - 1.0) * w - std::exp(shape * w);
}

double WeibullModel::density(double t, const Eigen::VectorXd& covariates) const {
    return std::exp(log_density(t, covariates));
}

double WeibullModel::hazard(double t, const Eigen::VectorXd& covariates) const {
    const double lam = scale(covariates);
    return (shape / lam) * std::pow(t / lam, shape - 1.0);
}

double WeibullModel::quantile(double p, const Eigen::VectorXd& covariates) const {
    if (p <= 0 || p >= 1) throw std::invalid_argument("quantile: p in (0,1) required");
    // S(t) = p  =>  t = scale * (-log p)^(1/k)
    return scale(covariates) * std::pow(-std::log(p), 1.0 / shape);
}

double WeibullModel::sample(const Eigen::VectorXd& covariates, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    return scale(covariates) * std::pow(-std::log(u), 1.0 / shape);
}

double weibull_loglik(const Eigen::VectorXd& params, const Eigen::VectorXd& t,
                      const Eigen::VectorXi& delta, const Eigen::MatrixXd& X,
                      Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    const int n = (int)t.size();
    const int p = (int)X.cols();
    const double a = params(0);
    const double k = std::exp(a);
    const Eigen::VectorXd gamma = params.tail(p);
    const Eigen::VectorXd eta = X * gamma;

    double ll = 0.0;
    if (grad) grad->setZero(p + 1);
    if (hess) hess->setZero(p + 1, p + 1);

    for (int i = 0; i < n; ++i) {
        const double w = std::log(t(i)) - eta(i);
        const double z = k * w;
        const double ez = std::exp(z);
        const double d = delta(i);
        ll += d * (a + (k - 1.0) * std::log(t(i)) - k * eta(i)) - ez;
        if (grad) {
            (*grad)(0) += d * (1.0 + z) - z * ez;
            grad->tail(p) += k * (ez - d) * X.row(i).transpose();
        }
        if (hess) {
            (*hess)(0, 0) += d * z - z * ez * (1.0 + z);
            const Eigen::VectorXd xi = X.row(i).transpose();
            const Eigen::VectorXd ha = k * (ez * (1.0 + z) - d) * xi;
            hess->block(1, 0, p, 1) += ha;
            hess->block(0, 1, 1, p) += ha.transpose();
            hess->block(1, 1, p, p) -= k * k * ez * xi * xi.transpose();
        }
    }
    return ll;
}

WeibullModel fit_weibull(const Eigen::VectorXd& t, const Eigen::VectorXi& delta,
                         const Eigen::MatrixXd& X, std::vector<std::string> names) {
    const int n = (int)t.size();
    const int p = (int)X.cols();
    if (delta.sum() == 0) throw FitError("fit_weibull: no events in dataset");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) throw FitError("fit_weibull: rank-deficient design matrix");

    // init: exponential fit ignoring covariates
    double tsum = t.sum();
    Eigen::VectorXd params = Eigen::VectorXd::Zero(p + 1);
    params(1) = std::log(std::max(tsum / std::max(1, (int)delta.sum()), 1e-8));

    const double tol = 1e-8;
    const int max_iter = 200;
    Eigen::VectorXd g;
    Eigen::MatrixXd H;
    double ll = weibull_loglik(params, t, delta, X, &g, &H);
    double gscale = std::max(1.0, std::abs(ll));
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        if (g.norm() / gscale < tol) break;
        Eigen::VectorXd step;
        // Newton step on -H; fall back to gradient ascent if not PD
        Eigen::LLT<Eigen::MatrixXd> llt(-H);
        if (llt.info() == Eigen::Success) step = llt.solve(g);
        else step = g / std::max(1.0, g.norm());

        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 50; ++ls) {
            Eigen::VectorXd cand = params + alpha * step;
            Eigen::VectorXd gc;
            Eigen::MatrixXd Hc;
            const double llc = weibull_loglik(cand, t, delta, X, &gc, &Hc);
            if (std::isfinite(llc) && llc > ll - 1e-12) {
                params = cand;
                ll = llc;
                g = gc;
                H = Hc;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
        gscale = std::max(1.0, std::abs(ll));
    }
    if (g.norm() / gscale >= tol) {
        throw FitError("fit_weibull: no convergence after " + std::to_string(iter) +
                       " iterations, relative gradient norm " + std::to_string(g.norm() / gscale));
    }

    WeibullModel m;
    m.shape = std::exp(params(0));
    m.coefficients = params.tail(p);
    m.covariate_names = std::move(names);
    m.loglik = ll;
    return m;
}

WeibullModel fit_parametric_survival(const LongitudinalDataset& ds) {
    const int n = (int)ds.subjects.size();
    if (n == 0) throw FitError("fit_parametric_survival: empty dataset");
    const int pv = (int)ds.covariate_names.size();
    Eigen::VectorXd t(n);
    Eigen::VectorXi delta(n);
    Eigen::MatrixXd X(n, pv + 1);
    for (int i = 0; i < n; ++i) {
        const auto& s = ds.subjects[i];
        t(i) = s.observed_time;
        delta(i) = s.event_indicator;
        X(i, 0) = 1.0;
        for (int j = 0; j < pv; ++j) X(i, j + 1) = s.covariates[j];
    }
    std::vector<std::string> names = {"(intercept)"};
    names.insert(names.end(), ds.covariate_names.begin(), ds.covariate_names.end());
    return fit_weibull(t, delta, X, std::move(names));
}

}  // namespace mbjm
