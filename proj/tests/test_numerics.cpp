#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mbjm/optim.hpp"
#include "mbjm/quadrature.hpp"

using namespace mbjm;

TEST_CASE("gauss-hermite integrates moments of exp(-x^2) exactly") {
    // int x^{2k} exp(-x^2) dx = Gamma(k + 1/2); exact for polynomials up to
    // degree 2n-1
    const double sqrt_pi = std::sqrt(std::numbers::pi);
    for (int n : {5, 15, 31}) {
        const QuadRule& r = gauss_hermite(n);
        REQUIRE((int)r.nodes.size() == n);
        double m0 = 0, m2 = 0, m4 = 0, m1 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = r.nodes[i], w = r.weights[i];
            m0 += w;
            m1 += w * x;
            m2 += w * x * x;
            m4 += w * x * x * x * x;
        }
        CHECK(m0 == doctest::Approx(sqrt_pi).epsilon(1e-13));
        CHECK(m1 == doctest::Approx(0.0).epsilon(1e-13));
        CHECK(m2 == doctest::Approx(0.5 * sqrt_pi).epsilon(1e-13));
        CHECK(m4 == doctest::Approx(0.75 * sqrt_pi).epsilon(1e-13));
    }
}

TEST_CASE("gauss-hermite evaluates a gaussian expectation") {
    // E[cos(Z)] = exp(-1/2) for Z ~ N(0,1); substitute z = sqrt(2) x
    const QuadRule& r = gauss_hermite(31);
    double acc = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i)
        acc += r.weights[i] * std::cos(std::numbers::sqrt2 * r.nodes[i]);
    acc /= std::sqrt(std::numbers::pi);
    CHECK(acc == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
    for (int n : {4, 8, 16}) {
        const QuadRule& r = gauss_legendre(n);
        double m0 = 0, m2 = 0, m6 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = r.nodes[i], w = r.weights[i];
            m0 += w;
            m2 += w * x * x;
            m6 += w * std::pow(x, 6);
        }
        CHECK(m0 == doctest::Approx(2.0).epsilon(1e-13));
        CHECK(m2 == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
        CHECK(m6 == doctest::Approx(2.0 / 7.0).epsilon(1e-13));
    }
}

TEST_CASE("mapped gauss-legendre integrates exp on [0, 3]") {
    const QuadRule r = gauss_legendre_on(16, 0.0, 3.0);
    double acc = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * std::exp(r.nodes[i]);
    CHECK(acc == doctest::Approx(std::exp(3.0) - 1.0).epsilon(1e-13));
}

TEST_CASE("bfgs minimizes rosenbrock") {
    auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const double a = x(0), b = x(1);
        g.resize(2);
        g(0) = -2 * (1 - a) - 400 * a * (b - a * a);
        g(1) = 200 * (b - a * a);
        return (1 - a) * (1 - a) + 100 * (b - a * a) * (b - a * a);
    };
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    OptimOptions opts;
    opts.max_iterations = 2000;
    const auto res = bfgs_minimize(f, x0, opts);
    CHECK(res.converged);
    CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(res.x(1) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("bfgs minimizes a quadratic in one-ish step") {
    auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = 2.0 * x;
        return x.squaredNorm();
    };
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(5, 3.0);
    const auto res = bfgs_minimize(f, x0);
    CHECK(res.converged);
    CHECK(res.x.norm() < 1e-6);
}

TEST_CASE("numerical gradient matches analytic on a smooth function") {
    auto f = [](const Eigen::VectorXd& x) {
        return std::sin(x(0)) * std::exp(x(1)) + x(2) * x(2);
    };
    Eigen::VectorXd x(3);
    x << 0.3, -0.2, 1.5;
    const Eigen::VectorXd g = numerical_gradient(f, x);
    CHECK(g(0) == doctest::Approx(std::cos(0.3) * std::exp(-0.2)).epsilon(1e-7));
    CHECK(g(1) == doctest::Approx(std::sin(0.3) * std::exp(-0.2)).epsilon(1e-7));
    CHECK(g(2) == doctest::Approx(3.0).epsilon(1e-7));
}
