#pragma once

#include <vector>

namespace mbjm {

struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Hermite rule for weight exp(-x^2) on (-inf, inf).
const QuadRule& gauss_hermite(int n);

// Gauss-Legendre rule on [-1, 1].
const QuadRule& gauss_legendre(int n);

// Gauss-Legendre mapped to [a, b].
QuadRule gauss_legendre_on(int n, double a, double b);

}  // namespace mbjm
