#pragma once

// Oracle path for single number-basis matrix elements of the attacker's
// conditional state: the double position-space integral is written as a 4D
// Gaussian quadratic form exp(-x^T A x + 2 b^T x + c) times Hermite
// polynomials, diagonalized, and integrated in closed form via Gaussian
// moments.  Exact up to the Hermite expansion (no quadrature error), but
// only valid for a detector stage with genuine loss (eta2 < 1); the
// production path owns the eta2 = 1 limit.

#include <Eigen/Dense>

#include "cvqkd/channel_model.hpp"

namespace cvqkd {

struct QuadraticForm4D {
    Eigen::Matrix4d a;   // symmetric positive definite, block pattern below
    Eigen::Vector4d b;   // (beta1, beta2, beta1, beta2)
    double c = 0.0;
    // Auxiliary scalars kept for inspection/tests: the noise-mode Gaussian
    // elimination constants.
    double p = 0.0, q = 0.0, r = 0.0, big_p = 0.0;
};

// Assemble the form for sent displacement S and outcome m.  A has the
// two-copy pattern a[0][0]=a[2][2], a[1][1]=a[3][3], a[0][1]=a[2][3],
// a[0][3]=a[1][2], reflecting that the element couples bra and ket copies of
// the same two modes.
QuadraticForm4D element_quadratic_form(double s, double m, const LinkModel& link);

// <n1 n2| rho |n3 n4> from the form: diagonalize A, substitute
// x = A^{-1/2} y + A^{-1} b, expand the product of Hermite polynomials as a
// polynomial in y, and integrate monomials against exp(-y^2) moments.
double matrix_element_from_form(const QuadraticForm4D& qf, int n1, int n2, int n3,
                                int n4, const LinkModel& link);

}  // namespace cvqkd
