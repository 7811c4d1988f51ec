#include "liekit/specfun.hpp"

#include <cmath>
#include <stdexcept>

#include "liekit/quad.hpp"

namespace liekit {

double upper_gamma(double a, double t) {
  if (!(t >= 0.0)) throw std::domain_error("upper_gamma: t must be >= 0");
  if (t == 0.0 && a < 1.0)
    throw std::domain_error("upper_gamma: integrand singular at 0 for a < 1");
  const double hi = t + 40.0 + 10.0 * a;
  return integrate_simpson(
      [a](double s) { return std::pow(s, a - 1.0) * std::exp(-s); }, t, hi,
      1e-14);
}

double hyp2f1(double a, double b, double c, double z) {
  if (!(std::fabs(z) < 1.0))
    throw std::domain_error("hyp2f1: series requires |z| < 1");
  if (c <= 0.0 && c == std::floor(c))
    throw std::domain_error("hyp2f1: c must not be a nonpositive integer");
  double term = 1.0;
  double sum = 1.0;
  for (long k = 0; k < 1000000; ++k) {
    term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
    sum += term;
    if (std::fabs(term) < 1e-16 * std::fabs(sum)) return sum;
  }
  throw std::runtime_error("hyp2f1: series did not converge");
}

namespace {

// Diagonal [6/6] Pade approximant after scaling the norm below 1/2; the
// truncation error of the approximant is then under 1e-16, so accuracy is
// limited by the squarings alone.
template <class M>
M expm_impl(const M& a) {
  using Scalar = typename M::Scalar;
  const double nrm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  const M x = a / std::pow(2.0, s);
  static const double c[7] = {1.0,        1.0 / 2.0,     5.0 / 44.0,
                              1.0 / 66.0, 1.0 / 792.0,   1.0 / 15840.0,
                              1.0 / 665280.0};
  const M id = M::Identity(a.rows(), a.cols());
  const M x2 = x * x;
  const M x4 = x2 * x2;
  const M even = id * Scalar(c[0]) + x2 * Scalar(c[2]) + x4 * Scalar(c[4]) +
                 (x4 * x2) * Scalar(c[6]);
  const M odd = x * (id * Scalar(c[1]) + x2 * Scalar(c[3]) + x4 * Scalar(c[5]));
  M f = (even - odd).lu().solve(even + odd);
  for (int i = 0; i < s; ++i) f = f * f;
  return f;
}

}  // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("expm: square matrix required");
  return expm_impl(a);
}

Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("expm: square matrix required");
  return expm_impl(a);
}

}  // namespace liekit
