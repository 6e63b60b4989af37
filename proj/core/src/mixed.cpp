#include "mbjm/mixed.hpp"

#include <cmath>
#include <numbers>

#include "mbjm/optim.hpp"
#include "mbjm/quadrature.hpp"
#include "mbjm/weibull.hpp"  // FitError

namespace mbjm {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

int n_chol_params(int q) { return q == 1 ? 1 : 3; }

// Omega = L L^T with L = [[e^c0, 0], [c2, e^c1]] (q=2) or [e^c0] (q=1).
Eigen::MatrixXd chol_from_params(const Eigen::VectorXd& c, int q) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(q, q);
    L(0, 0) = std::exp(c(0));
    if (q == 2) {
        L(1, 1) = std::exp(c(1));
        L(1, 0) = c(2);
    }
    return L;
}

Eigen::MatrixXd chol_param_deriv(const Eigen::VectorXd& c, int q, int k) {
    Eigen::MatrixXd dL = Eigen::MatrixXd::Zero(q, q);
    if (k == 0) dL(0, 0) = std::exp(c(0));
    else if (k == 1) dL(1, 1) = std::exp(c(1));
    else dL(1, 0) = 1.0;
    return dL;
}

// Cholesky params recovering a given PSD Omega, floored away from zero.
Eigen::VectorXd chol_params_from_omega(const Eigen::MatrixXd& omega, int q) {
    Eigen::VectorXd c(n_chol_params(q));
    if (q == 1) {
        c(0) = 0.5 * std::log(std::max(omega(0, 0), 1e-12));
    } else {
        Eigen::LLT<Eigen::MatrixXd> llt(omega + 1e-12 * Eigen::MatrixXd::Identity(2, 2));
        Eigen::MatrixXd L = llt.matrixL();
        c(0) = std::log(std::max(L(0, 0), 1e-8));
        c(1) = std::log(std::max(L(1, 1), 1e-8));
        c(2) = L(1, 0);
    }
    return c;
}

// Rank-one case Sigma = sigma2 I + omega2 u u^T by Sherman-Morrison; O(n).
// Fills z = Sigma^{-1} r, the trace of Sigma^{-1}, and u^T Sigma^{-1} u when
// the pointers are non-null.
double gaussian_loglik_rank1(const Eigen::VectorXd& r, const Eigen::VectorXd& u,
                             double sigma2, double omega2, Eigen::VectorXd* z = nullptr,
                             double* trace_inv = nullptr, double* u_sinv_u = nullptr) {
    const int n = (int)r.size();
    const double c = u.squaredNorm();
    const double denom = sigma2 + omega2 * c;
    const double ur = u.dot(r);
    const double quad = (r.squaredNorm() - omega2 * ur * ur / denom) / sigma2;
    const double logdet = n * std::log(sigma2) + std::log(denom / sigma2);
    if (z) *z = (r - (omega2 * ur / denom) * u) / sigma2;
    if (trace_inv) *trace_inv = (n - omega2 * c / denom) / sigma2;
    if (u_sinv_u) *u_sinv_u = c / denom;
    return -0.5 * (n * kLog2Pi + logdet + quad);
}

double gaussian_loglik(const Eigen::VectorXd& r, const Eigen::MatrixXd& Sigma) {
    Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
    const Eigen::VectorXd z = llt.solve(r);
    double logdet = 0.0;
    for (int i = 0; i < Sigma.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * (r.size() * kLog2Pi + logdet + r.dot(z));
}

double bernoulli_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
    double ll = 0.0;
    for (int j = 0; j < y.size(); ++j) {
        const double e = eta(j);
        // y*eta - log(1+exp(eta)) computed stably
        ll += y(j) * e - (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)));
    }
    return ll;
}

// log integrand of the GLMM random-effect integral: Bernoulli product times
// the N(0, Omega) prior density.
double glmm_log_integrand(const Eigen::VectorXd& y, const Eigen::VectorXd& eta0,
                          const Eigen::MatrixXd& U, const Eigen::VectorXd& b,
                          const Eigen::LLT<Eigen::MatrixXd>& omega_llt, double omega_logdet) {
    const Eigen::VectorXd eta = eta0 + U * b;
    const Eigen::VectorXd z = omega_llt.solve(b);
    const double prior =
        -0.5 * (b.size() * kLog2Pi + omega_logdet + b.dot(z));
    return bernoulli_loglik(y, eta) + prior;
}

// Marginal log-likelihood for one subject by adaptive Gauss-Hermite. When
// grad != nullptr the score is accumulated as the posterior expectation of the
// complete-data score, E_post[d log f(y, b; theta) / d theta], evaluated on
// the same nodes and self-normalized weights; exact up to quadrature error.
// Gradient layout: [beta, chol params of Omega].
double glmm_subject_loglik(const Eigen::VectorXd& beta, const Eigen::MatrixXd& omega,
                           const Eigen::VectorXd& c, const SubjectRows& rows, int Q,
                           Eigen::VectorXd* grad = nullptr) {
    const int q = (int)omega.rows();
    const int p = (int)beta.size();
    const int nc = n_chol_params(q);
    const Eigen::VectorXd eta0 = rows.X * beta;

    if (omega(0, 0) < 1e-10 && (q == 1 || omega(1, 1) < 1e-10)) {
        if (grad) {
            Eigen::VectorXd mu(eta0.size());
            for (int j = 0; j < eta0.size(); ++j) mu(j) = 1.0 / (1.0 + std::exp(-eta0(j)));
            grad->head(p) += rows.X.transpose() * (rows.y - mu);
        }
        return bernoulli_loglik(rows.y, eta0);
    }

    Eigen::LLT<Eigen::MatrixXd> omega_llt(omega +
                                          1e-12 * Eigen::MatrixXd::Identity(q, q));
    double omega_logdet = 0.0;
    for (int i = 0; i < q; ++i) omega_logdet += 2.0 * std::log(omega_llt.matrixL()(i, i));

    // conditional mode by Newton
    Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
    Eigen::MatrixXd H(q, q);
    for (int it = 0; it < 50; ++it) {
        const Eigen::VectorXd eta = eta0 + rows.U * b;
        Eigen::VectorXd mu(eta.size()), w(eta.size());
        for (int j = 0; j < eta.size(); ++j) {
            mu(j) = 1.0 / (1.0 + std::exp(-eta(j)));
            w(j) = mu(j) * (1.0 - mu(j));
        }
        const Eigen::VectorXd grad =
            rows.U.transpose() * (rows.y - mu) - omega_llt.solve(b);
        H = rows.U.transpose() * w.asDiagonal() * rows.U +
            omega_llt.solve(Eigen::MatrixXd::Identity(q, q));
        const Eigen::VectorXd step = H.llt().solve(grad);
        b += step;
        if (step.norm() < 1e-12) break;
    }

    // curvature-scaled nodes: b = bhat + sqrt(2) * S * x with S S^T = H^{-1}
    Eigen::LLT<Eigen::MatrixXd> hllt(H);
    const Eigen::MatrixXd S =
        hllt.matrixL().solve(Eigen::MatrixXd::Identity(q, q)).transpose();
    double logdetS = 0.0;
    for (int i = 0; i < q; ++i) logdetS -= std::log(hllt.matrixL()(i, i));

    const QuadRule& gh = gauss_hermite(Q);
    const double sqrt2 = std::numbers::sqrt2;

    double lse_max = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    std::vector<Eigen::VectorXd> node_b;
    if (q == 1) {
        terms.reserve(Q);
        node_b.reserve(Q);
        for (int a = 0; a < Q; ++a) {
            Eigen::VectorXd bb = b + sqrt2 * S.col(0) * gh.nodes[a];
            const double lt = std::log(gh.weights[a]) + gh.nodes[a] * gh.nodes[a] +
                              glmm_log_integrand(rows.y, eta0, rows.U, bb, omega_llt,
                                                 omega_logdet);
            terms.push_back(lt);
            node_b.push_back(std::move(bb));
            lse_max = std::max(lse_max, lt);
        }
    } else {
        terms.reserve((std::size_t)Q * Q);
        node_b.reserve((std::size_t)Q * Q);
        for (int a = 0; a < Q; ++a)
            for (int cc = 0; cc < Q; ++cc) {
                Eigen::VectorXd x(2);
                x << gh.nodes[a], gh.nodes[cc];
                Eigen::VectorXd bb = b + sqrt2 * (S * x);
                const double lt = std::log(gh.weights[a] * gh.weights[cc]) + x.squaredNorm() +
                                  glmm_log_integrand(rows.y, eta0, rows.U, bb, omega_llt,
                                                     omega_logdet);
                terms.push_back(lt);
                node_b.push_back(std::move(bb));
                lse_max = std::max(lse_max, lt);
            }
    }
    double sum = 0.0;
    for (double lt : terms) sum += std::exp(lt - lse_max);

    if (grad) {
        std::vector<Eigen::MatrixXd> D(nc);
        const Eigen::MatrixXd L = chol_from_params(c, q);
        for (int k = 0; k < nc; ++k) {
            const Eigen::MatrixXd dL = chol_param_deriv(c, q, k);
            D[k] = dL * L.transpose() + L * dL.transpose();
        }
        for (std::size_t a = 0; a < terms.size(); ++a) {
            const double w = std::exp(terms[a] - lse_max) / sum;
            if (w < 1e-14) continue;
            const Eigen::VectorXd& bb = node_b[a];
            const Eigen::VectorXd eta = eta0 + rows.U * bb;
            Eigen::VectorXd mu(eta.size());
            for (int j = 0; j < eta.size(); ++j) mu(j) = 1.0 / (1.0 + std::exp(-eta(j)));
            grad->head(p) += w * (rows.X.transpose() * (rows.y - mu));
            const Eigen::VectorXd ob = omega_llt.solve(bb);
            for (int k = 0; k < nc; ++k)
                (*grad)(p + k) +=
                    w * (-0.5) * ((omega_llt.solve(D[k])).trace() - ob.dot(D[k] * ob));
        }
    }
    return 0.5 * q * std::numbers::ln2 + logdetS + lse_max + std::log(sum);
}

}  // namespace

std::vector<std::string> LayerDesign::column_names(
    const std::vector<std::string>& covariate_names,
    const std::vector<std::string>& prev_names) const {
    std::vector<std::string> names = {"(intercept)", "time"};
    names.insert(names.end(), covariate_names.begin(), covariate_names.end());
    names.insert(names.end(), prev_names.begin(), prev_names.end());
    if (has_g_column) names.push_back("g(T)");
    return names;
}

double marginal_loglik_lmm(const LmmFit& fit, const SubjectRows& rows) {
    const Eigen::VectorXd r = rows.y - rows.X * fit.beta;
    if (fit.omega.rows() == 1)
        return gaussian_loglik_rank1(r, rows.U.col(0), fit.sigma2, fit.omega(0, 0));
    const Eigen::MatrixXd Sigma =
        fit.sigma2 * Eigen::MatrixXd::Identity(r.size(), r.size()) +
        rows.U * fit.omega * rows.U.transpose();
    return gaussian_loglik(r, Sigma);
}

double marginal_loglik_glmm(const GlmmFit& fit, const SubjectRows& rows, int Q) {
    const Eigen::VectorXd c = chol_params_from_omega(fit.omega, (int)fit.omega.rows());
    return glmm_subject_loglik(fit.beta, fit.omega, c, rows, Q);
}

double lmm_loglik_packed(const Eigen::VectorXd& theta, const std::vector<SubjectRows>& data,
                         int p, int q, Eigen::VectorXd* grad) {
    const int nc = n_chol_params(q);
    const Eigen::VectorXd beta = theta.head(p);
    const double log_sigma = theta(p);
    const double sigma2 = std::exp(2.0 * log_sigma);
    const Eigen::VectorXd c = theta.segment(p + 1, nc);
    const Eigen::MatrixXd L = chol_from_params(c, q);
    const Eigen::MatrixXd omega = L * L.transpose();

    std::vector<Eigen::MatrixXd> domega(nc);
    if (grad) {
        for (int k = 0; k < nc; ++k) {
            const Eigen::MatrixXd dL = chol_param_deriv(c, q, k);
            domega[k] = dL * L.transpose() + L * dL.transpose();
        }
        grad->setZero(theta.size());
    }

    double ll = 0.0;
    for (const auto& rows : data) {
        const int ni = (int)rows.y.size();
        const Eigen::VectorXd r = rows.y - rows.X * beta;
        if (q == 1) {
            const Eigen::VectorXd u = rows.U.col(0);
            Eigen::VectorXd z;
            double trace_inv = 0.0, usu = 0.0;
            ll += gaussian_loglik_rank1(r, u, sigma2, omega(0, 0), &z, &trace_inv, &usu);
            if (grad) {
                grad->head(p) += rows.X.transpose() * z;
                (*grad)(p) += -sigma2 * (trace_inv - z.squaredNorm());
                // d omega / d c0 = 2 omega, D = 2 omega u u^T
                const double uz = u.dot(z);
                (*grad)(p + 1) += -omega(0, 0) * (usu - uz * uz);
            }
            continue;
        }
        Eigen::MatrixXd Sigma = rows.U * omega * rows.U.transpose();
        Sigma.diagonal().array() += sigma2;
        Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
        const Eigen::VectorXd z = llt.solve(r);
        double logdet = 0.0;
        for (int i = 0; i < ni; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
        ll += -0.5 * (ni * kLog2Pi + logdet + r.dot(z));

        if (grad) {
            grad->head(p) += rows.X.transpose() * z;
            const Eigen::MatrixXd Sinv = llt.solve(Eigen::MatrixXd::Identity(ni, ni));
            // d Sigma / d log_sigma = 2 sigma2 I
            (*grad)(p) += -0.5 * 2.0 * sigma2 * (Sinv.trace() - z.squaredNorm());
            for (int k = 0; k < nc; ++k) {
                const Eigen::MatrixXd D = rows.U * domega[k] * rows.U.transpose();
                (*grad)(p + 1 + k) +=
                    -0.5 * ((Sinv.cwiseProduct(D)).sum() - z.dot(D * z));
            }
        }
    }
    return ll;
}

double glmm_loglik_packed(const Eigen::VectorXd& theta, const std::vector<SubjectRows>& data,
                          int p, int q, int Q, Eigen::VectorXd* grad) {
    const Eigen::VectorXd beta = theta.head(p);
    const Eigen::VectorXd c = theta.tail(n_chol_params(q));
    const Eigen::MatrixXd L = chol_from_params(c, q);
    const Eigen::MatrixXd omega = L * L.transpose();
    if (grad) grad->setZero(theta.size());
    double ll = 0.0;
    for (const auto& rows : data) ll += glmm_subject_loglik(beta, omega, c, rows, Q, grad);
    return ll;
}

LmmFit fit_lmm(const std::vector<SubjectRows>& data, const LayerDesign& design) {
    if (data.size() < 2) throw FitError("fit_lmm: need at least 2 subjects");
    const int p = design.fixed_dim();
    const int q = design.random_dim();
    const int nc = n_chol_params(q);

    // pooled OLS start
    std::size_t ntot = 0;
    for (const auto& d : data) ntot += d.y.size();
    Eigen::MatrixXd X(ntot, p);
    Eigen::VectorXd y(ntot);
    std::size_t off = 0;
    std::size_t max_ni = 0;
    for (const auto& d : data) {
        X.middleRows(off, d.y.size()) = d.X;
        y.segment(off, d.y.size()) = d.y;
        off += d.y.size();
        max_ni = std::max(max_ni, (std::size_t)d.y.size());
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) throw FitError("fit_lmm: rank-deficient fixed-effect design");
    const Eigen::VectorXd beta0 = qr.solve(y);
    const double s2 = std::max((y - X * beta0).squaredNorm() / (double)ntot, 1e-8);

    LmmFit fit;
    if (max_ni <= (std::size_t)q) {
        // one row per subject: omega and sigma2 are not separable
        fit.beta = beta0;
        fit.omega = Eigen::MatrixXd::Zero(q, q);
        fit.sigma2 = s2;
        fit.loglik = lmm_loglik_packed(
            (Eigen::VectorXd(p + 1 + nc) << beta0, 0.5 * std::log(s2),
             Eigen::VectorXd::Constant(nc, -10.0))
                .finished(),
            data, p, q, nullptr);
        fit.warnings.push_back(
            "variance components unidentifiable with <= " + std::to_string(q) +
            " rows per subject; returning boundary fit with omega = 0");
        return fit;
    }

    Eigen::VectorXd theta(p + 1 + nc);
    theta.head(p) = beta0;
    theta(p) = 0.5 * std::log(0.5 * s2);
    theta.segment(p + 1, nc) = chol_params_from_omega(
        0.5 * s2 * Eigen::MatrixXd::Identity(q, q), q);

    auto objective = [&](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
        Eigen::VectorXd gl;
        const double ll = lmm_loglik_packed(th, data, p, q, &gl);
        g = -gl;
        return -ll;
    };
    OptimOptions opts;
    const auto res = bfgs_minimize(objective, theta, opts);
    if (!res.converged && res.grad_norm > 1e-4 * std::max(1.0, std::abs(res.fval)))
        throw FitError("fit_lmm: no convergence (" + res.message + ", |grad| = " +
                       std::to_string(res.grad_norm) + ")");

    fit.beta = res.x.head(p);
    fit.sigma2 = std::exp(2.0 * res.x(p));
    const Eigen::MatrixXd L = chol_from_params(res.x.segment(p + 1, nc), q);
    fit.omega = L * L.transpose();
    fit.loglik = -res.fval;
    if (fit.sigma2 < 1e-10) {
        fit.sigma2 = 1e-10;
        fit.warnings.push_back("residual variance hit lower floor 1e-10");
    }
    return fit;
}

GlmmFit fit_glmm(const std::vector<SubjectRows>& data, const LayerDesign& design, int Q) {
    if (data.size() < 2) throw FitError("fit_glmm: need at least 2 subjects");
    const int p = design.fixed_dim();
    const int q = design.random_dim();
    const int nc = n_chol_params(q);

    for (const auto& d : data)
        for (int j = 0; j < d.y.size(); ++j)
            if (d.y(j) != 0.0 && d.y(j) != 1.0)
                throw FitError("fit_glmm: outcome not binary");

    // pooled logistic IRLS start
    std::size_t ntot = 0;
    for (const auto& d : data) ntot += d.y.size();
    Eigen::MatrixXd X(ntot, p);
    Eigen::VectorXd y(ntot);
    std::size_t off = 0;
    for (const auto& d : data) {
        X.middleRows(off, d.y.size()) = d.X;
        y.segment(off, d.y.size()) = d.y;
        off += d.y.size();
    }
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd eta = X * beta;
        Eigen::VectorXd mu(ntot), w(ntot);
        for (std::size_t j = 0; j < ntot; ++j) {
            mu(j) = 1.0 / (1.0 + std::exp(-eta(j)));
            w(j) = std::max(mu(j) * (1.0 - mu(j)), 1e-10);
        }
        const Eigen::MatrixXd XtWX = X.transpose() * w.asDiagonal() * X;
        const Eigen::VectorXd score = X.transpose() * (y - mu);
        const Eigen::VectorXd step = XtWX.ldlt().solve(score);
        beta += step;
        if (step.norm() < 1e-10) break;
        if (beta.cwiseAbs().maxCoeff() > 30.0) {
            int worst = 0;
            beta.cwiseAbs().maxCoeff(&worst);
            throw FitError("fit_glmm: complete separation suspected on column " +
                           std::to_string(worst));
        }
    }
    {
        // near-perfect pooled classification is the practical separation signal
        const Eigen::VectorXd eta = X * beta;
        bool perfect = true;
        for (std::size_t j = 0; j < ntot && perfect; ++j) {
            const double mu = 1.0 / (1.0 + std::exp(-eta(j)));
            perfect = y(j) == 1.0 ? mu > 1.0 - 1e-4 : mu < 1e-4;
        }
        if (perfect) {
            int worst = 0;
            beta.cwiseAbs().maxCoeff(&worst);
            throw FitError("fit_glmm: complete separation suspected on column " +
                           std::to_string(worst));
        }
    }

    Eigen::VectorXd theta(p + nc);
    theta.head(p) = beta;
    theta.tail(nc) = chol_params_from_omega(0.25 * Eigen::MatrixXd::Identity(q, q), q);

    auto objective = [&](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
        Eigen::VectorXd gl;
        const double ll = glmm_loglik_packed(th, data, p, q, Q, &gl);
        g = -gl;
        return -ll;
    };
    OptimOptions opts;
    opts.rel_grad_tol = 1e-7;  // score is quadrature-approximate
    const auto res = bfgs_minimize(objective, theta, opts);
    if (!res.converged && res.grad_norm > 1e-3 * std::max(1.0, std::abs(res.fval)))
        throw FitError("fit_glmm: no convergence (" + res.message + ", |grad| = " +
                       std::to_string(res.grad_norm) + ")");
    if (res.x.head(p).cwiseAbs().maxCoeff() > 30.0) {
        int worst = 0;
        res.x.head(p).cwiseAbs().maxCoeff(&worst);
        throw FitError("fit_glmm: complete separation suspected on column " +
                       std::to_string(worst));
    }

    GlmmFit fit;
    fit.beta = res.x.head(p);
    const Eigen::MatrixXd L = chol_from_params(res.x.tail(nc), q);
    fit.omega = L * L.transpose();
    fit.loglik = -res.fval;
    return fit;
}

}  // namespace mbjm
