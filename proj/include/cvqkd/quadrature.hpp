#pragma once

// Gaussian quadrature rules computed by the Golub-Welsch eigenvalue method.

#include <vector>

namespace cvqkd {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// n-point Gauss-Hermite rule for integrals of f(x) exp(-x^2) over the real
// line.  Nodes are returned in ascending order and symmetrised so that
// nodes[i] == -nodes[n-1-i] exactly (odd n has an exact zero in the middle).
QuadratureRule gauss_hermite(int n);

// n-point Gauss-Legendre rule on [-1, 1], nodes ascending and symmetrised.
QuadratureRule gauss_legendre(int n);

// Gauss-Legendre rule mapped to [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

}  // namespace cvqkd
