#pragma once

#include <Eigen/Dense>

namespace liekit {

// Upper incomplete gamma function Gamma(a, t) for t >= 0, computed by
// quadrature on a truncated interval; the neglected tail beyond
// t + 40 + 10a is below 1e-14 for the parameter ranges used here.
// Requires a >= 1 when t == 0 (the integrand is singular at the origin
// otherwise).
double upper_gamma(double a, double t);

// Gauss hypergeometric function 2F1(a, b; c; z) by its power series,
// valid for |z| < 1.  Summation stops once a term drops below 1e-16 of
// the partial sum; throws std::runtime_error if 1e6 terms do not suffice
// and std::domain_error for out-of-range z or nonpositive integer c.
double hyp2f1(double a, double b, double c, double z);

// Matrix exponential by scaling and squaring with a diagonal Pade
// approximant.  Intended for the small dense matrices used in this
// project; accuracy is near machine precision.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);
Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a);

}  // namespace liekit
