#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mbjm/mixed.hpp"
#include "mbjm/weibull.hpp"
#include "mbjm/optim.hpp"

using namespace mbjm;

namespace {

LayerDesign plain_design() {
    LayerDesign d;
    d.n_covariates = 0;
    d.n_prev = 0;
    d.has_g_column = false;
    d.random_slope = false;
    return d;
}

std::vector<SubjectRows> simulate_glmm(int n_subjects, int n_obs, double b0, double b1,
                                       double omega2, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::vector<SubjectRows> data;
    for (int i = 0; i < n_subjects; ++i) {
        SubjectRows rows;
        rows.X.resize(n_obs, 2);
        rows.U = Eigen::MatrixXd::Ones(n_obs, 1);
        rows.y.resize(n_obs);
        const double bi = std::sqrt(omega2) * nd(rng);
        for (int j = 0; j < n_obs; ++j) {
            const double t = 0.5 * j;
            rows.X(j, 0) = 1.0;
            rows.X(j, 1) = t;
            const double eta = b0 + b1 * t + bi;
            rows.y(j) = ud(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
        }
        data.push_back(std::move(rows));
    }
    return data;
}

// dense trapezoid evaluation of log int prod_j p(y_j | b) phi(b; 0, omega2) db
double trapezoid_marginal(const Eigen::VectorXd& beta, double omega2, const SubjectRows& rows,
                          int n_points) {
    const double sd = std::sqrt(omega2);
    const double lo = -10.0 * sd, hi = 10.0 * sd;
    const double h = (hi - lo) / (n_points - 1);
    double acc = 0.0;
    for (int i = 0; i < n_points; ++i) {
        const double b = lo + i * h;
        double ll = -0.5 * std::log(2 * M_PI * omega2) - 0.5 * b * b / omega2;
        for (int j = 0; j < rows.y.size(); ++j) {
            const double eta = rows.X.row(j).dot(beta) + b;
            ll += rows.y(j) * eta -
                  (eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)));
        }
        const double w = (i == 0 || i == n_points - 1) ? 0.5 : 1.0;
        acc += w * std::exp(ll);
    }
    return std::log(acc * h);
}

}  // namespace

TEST_CASE("adaptive quadrature matches a million-point trapezoid") {
    GlmmFit fit;
    fit.beta = Eigen::VectorXd(2);
    fit.beta << -0.4, 0.3;
    fit.omega = Eigen::MatrixXd::Constant(1, 1, 0.8);
    SubjectRows rows;
    rows.X.resize(6, 2);
    rows.U = Eigen::MatrixXd::Ones(6, 1);
    rows.y.resize(6);
    rows.y << 1, 0, 1, 1, 0, 1;
    for (int j = 0; j < 6; ++j) {
        rows.X(j, 0) = 1.0;
        rows.X(j, 1) = 0.5 * j;
    }
    const double oracle = trapezoid_marginal(fit.beta, 0.8, rows, 1000000);
    CHECK(marginal_loglik_glmm(fit, rows, 15) == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(marginal_loglik_glmm(fit, rows, 5) == doctest::Approx(oracle).epsilon(1e-4));
}

TEST_CASE("node count is saturated: Q = 15 vs Q = 61") {
    const auto data = simulate_glmm(20, 8, 0.3, -0.2, 0.6, 5);
    GlmmFit fit;
    fit.beta = Eigen::VectorXd(2);
    fit.beta << 0.25, -0.15;
    fit.omega = Eigen::MatrixXd::Constant(1, 1, 0.5);
    for (const auto& rows : data) {
        const double a = marginal_loglik_glmm(fit, rows, 15);
        const double b = marginal_loglik_glmm(fit, rows, 61);
        CHECK(a == doctest::Approx(b).epsilon(1e-4));
    }
}

TEST_CASE("zero random-effect variance reduces to plain logistic likelihood") {
    GlmmFit fit;
    fit.beta = Eigen::VectorXd(2);
    fit.beta << 0.7, -0.4;
    fit.omega = Eigen::MatrixXd::Zero(1, 1);
    SubjectRows rows;
    rows.X.resize(4, 2);
    rows.U = Eigen::MatrixXd::Ones(4, 1);
    rows.y.resize(4);
    rows.y << 1, 1, 0, 0;
    for (int j = 0; j < 4; ++j) {
        rows.X(j, 0) = 1.0;
        rows.X(j, 1) = (double)j;
    }
    double expect = 0.0;
    for (int j = 0; j < 4; ++j) {
        const double eta = fit.beta(0) + fit.beta(1) * j;
        const double p = 1.0 / (1.0 + std::exp(-eta));
        expect += rows.y(j) == 1.0 ? std::log(p) : std::log(1 - p);
    }
    CHECK(marginal_loglik_glmm(fit, rows, 15) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("single coin-flip observation has loglik log(1/2)") {
    GlmmFit fit;
    fit.beta = Eigen::VectorXd::Zero(1);
    fit.omega = Eigen::MatrixXd::Zero(1, 1);
    SubjectRows rows;
    rows.X = Eigen::MatrixXd::Ones(1, 1);
    rows.U = Eigen::MatrixXd::Ones(1, 1);
    rows.y = Eigen::VectorXd::Ones(1);
    CHECK(marginal_loglik_glmm(fit, rows, 15) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("posterior-expectation score matches finite differences") {
    const auto data = simulate_glmm(15, 6, 0.4, -0.3, 0.5, 11);
    Eigen::VectorXd theta(3);
    theta << 0.3, -0.2, -0.4;  // [beta0, beta1, c0]
    Eigen::VectorXd grad;
    glmm_loglik_packed(theta, data, 2, 1, 31, &grad);
    const Eigen::VectorXd fd = numerical_gradient(
        [&](const Eigen::VectorXd& th) { return glmm_loglik_packed(th, data, 2, 1, 31); },
        theta);
    for (int k = 0; k < 3; ++k)
        CHECK(grad(k) ==
              doctest::Approx(fd(k)).epsilon(1e-5).scale(std::max(1.0, std::abs(fd(k)))));
}

TEST_CASE("ml fit recovers generating parameters") {
    const double b0 = 0.5, b1 = -0.3, omega2 = 0.7;
    const auto data = simulate_glmm(1200, 8, b0, b1, omega2, 17);
    const GlmmFit fit = fit_glmm(data, plain_design(), 15);
    CHECK(fit.beta(0) == doctest::Approx(b0).scale(1.0).epsilon(0.15));
    CHECK(fit.beta(1) == doctest::Approx(b1).scale(1.0).epsilon(0.15));
    CHECK(fit.omega(0, 0) == doctest::Approx(omega2).epsilon(0.30));
}

TEST_CASE("fit maximizes the packed likelihood against parameter jitter") {
    const auto data = simulate_glmm(80, 6, 0.2, 0.1, 0.4, 23);
    const GlmmFit fit = fit_glmm(data, plain_design(), 15);
    Eigen::VectorXd theta(3);
    theta << fit.beta(0), fit.beta(1), 0.5 * std::log(std::max(fit.omega(0, 0), 1e-12));
    const double at_opt = glmm_loglik_packed(theta, data, 2, 1, 15);
    CHECK(at_opt == doctest::Approx(fit.loglik).epsilon(1e-8));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd(0.0, 0.05);
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::VectorXd jit = theta;
        for (int k = 0; k < 3; ++k) jit(k) += nd(rng);
        CHECK(glmm_loglik_packed(jit, data, 2, 1, 15) <= at_opt + 1e-6);
    }
}

TEST_CASE("non-binary outcome is rejected") {
    auto data = simulate_glmm(10, 4, 0.0, 0.0, 0.3, 31);
    data[0].y(0) = 0.5;
    CHECK_THROWS_AS(fit_glmm(data, plain_design(), 15), FitError);
}

TEST_CASE("complete separation raises a diagnostic error") {
    // second column perfectly predicts the outcome
    std::vector<SubjectRows> data;
    for (int i = 0; i < 20; ++i) {
        SubjectRows rows;
        rows.X.resize(4, 2);
        rows.U = Eigen::MatrixXd::Ones(4, 1);
        rows.y.resize(4);
        for (int j = 0; j < 4; ++j) {
            rows.X(j, 0) = 1.0;
            rows.X(j, 1) = (i + j) % 2 == 0 ? 1.0 : -1.0;
            rows.y(j) = rows.X(j, 1) > 0 ? 1.0 : 0.0;
        }
        data.push_back(std::move(rows));
    }
    try {
        fit_glmm(data, plain_design(), 15);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(std::string(e.what()).find("separation") != std::string::npos);
    }
}
