#include "mbjm/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace mbjm {

namespace {

// Golub-Welsch: eigen-decompose the symmetric tridiagonal Jacobi matrix.
QuadRule golub_welsch(const Eigen::VectorXd& offdiag, double mu0) {
    const int n = (int)offdiag.size() + 1;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        J(i, i + 1) = offdiag(i);
        J(i + 1, i) = offdiag(i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

QuadRule make_hermite(int n) {
    Eigen::VectorXd b(n - 1);
    for (int i = 1; i < n; ++i) b(i - 1) = std::sqrt(i / 2.0);
    return golub_welsch(b, std::sqrt(std::numbers::pi));
}

QuadRule make_legendre(int n) {
    Eigen::VectorXd b(n - 1);
    for (int i = 1; i < n; ++i) b(i - 1) = i / std::sqrt(4.0 * i * i - 1.0);
    return golub_welsch(b, 2.0);
}

const QuadRule& cached(std::map<int, QuadRule>& cache, std::mutex& mu, int n,
                       QuadRule (*make)(int)) {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make(n)).first;
    return it->second;
}

}  // namespace

const QuadRule& gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n >= 1 required");
    static std::map<int, QuadRule> cache;
    static std::mutex mu;
    return cached(cache, mu, n, make_hermite);
}

const QuadRule& gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
    static std::map<int, QuadRule> cache;
    static std::mutex mu;
    return cached(cache, mu, n, make_legendre);
}

QuadRule gauss_legendre_on(int n, double a, double b) {
    const QuadRule& base = gauss_legendre(n);
    QuadRule rule = base;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = mid + half * base.nodes[i];
        rule.weights[i] = half * base.weights[i];
    }
    return rule;
}

}  // namespace mbjm
