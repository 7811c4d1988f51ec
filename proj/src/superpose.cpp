#include "liekit/superpose.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "liekit/parallel.hpp"
#include "liekit/quad.hpp"

namespace liekit {

namespace {

bool distinct(double a, double b) {
  return std::abs(a - b) > 1e-9 * (1.0 + std::abs(a) + std::abs(b));
}

void require_distinct(double x1, double x2, double x3) {
  if (!distinct(x1, x2) || !distinct(x1, x3) || !distinct(x2, x3))
    throw std::invalid_argument("coincident particular solutions");
}

Eigen::MatrixXd solution_matrix(const std::vector<std::vector<double>>& sols) {
  const auto n = static_cast<Eigen::Index>(sols.front().size());
  Eigen::MatrixXd a(n, static_cast<Eigen::Index>(sols.size()));
  for (std::size_t j = 0; j < sols.size(); ++j) {
    if (static_cast<Eigen::Index>(sols[j].size()) != n)
      throw std::invalid_argument("ragged solution list");
    for (Eigen::Index i = 0; i < n; ++i)
      a(i, static_cast<Eigen::Index>(j)) = sols[j][static_cast<std::size_t>(i)];
  }
  return a;
}

std::vector<double> solve_square(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw std::invalid_argument("singular solution configuration");
  Eigen::VectorXd k = lu.solve(b);
  return std::vector<double>(k.data(), k.data() + k.size());
}

bool well_conditioned(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  double smax = svd.singularValues()(0);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  return smax > 0.0 && smin > 1e-3 * smax;
}

// Shared solve for the velocity-free pair rules: coefficients (k1, k2) with
// k1*(a1, b1) + k2*(a2, b2) = (a, b).
std::array<double, 2> solve_pair(double a1, double a2, double b1, double b2, double a,
                                 double b) {
  double det = a1 * b2 - a2 * b1;
  double scale = std::abs(a1 * b2) + std::abs(a2 * b1);
  if (std::abs(det) <= 1e-12 * (scale + 1.0))
    throw std::invalid_argument("dependent initial data");
  return {(a * b2 - a2 * b) / det, (a1 * b - a * b1) / det};
}

}  // namespace

// ---------------------------------------------------------------------------
// Pointwise closed forms
// ---------------------------------------------------------------------------

double riccati_rule(double x1, double x2, double x3, double k) {
  if (!std::isfinite(x1) || !std::isfinite(x2) || !std::isfinite(x3))
    throw std::invalid_argument("particular solutions must be finite");
  require_distinct(x1, x2, x3);
  if (std::isinf(k)) return x2;
  double num = x1 * (x3 - x2) - k * x2 * (x3 - x1);
  double den = (x3 - x2) - k * (x3 - x1);
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

double riccati_constant(double x, double x1, double x2, double x3) {
  if (!std::isfinite(x1) || !std::isfinite(x2) || !std::isfinite(x3))
    throw std::invalid_argument("particular solutions must be finite");
  require_distinct(x1, x2, x3);
  if (std::isinf(x)) return (x3 - x2) / (x3 - x1);
  double num = (x - x1) * (x3 - x2);
  double den = (x - x2) * (x3 - x1);
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

std::vector<double> linear_rule(const std::vector<std::vector<double>>& sols,
                                const std::vector<double>& k) {
  if (sols.empty() || sols.size() != k.size() || sols.size() != sols.front().size())
    throw std::invalid_argument("need n solutions of dimension n and n constants");
  std::size_t n = sols.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) out[i] += k[j] * sols[j][i];
  return out;
}

std::vector<double> linear_constants(const std::vector<double>& x,
                                     const std::vector<std::vector<double>>& sols) {
  if (sols.empty() || sols.size() != x.size() || sols.front().size() != x.size())
    throw std::invalid_argument("need n solutions of dimension n");
  Eigen::MatrixXd a = solution_matrix(sols);
  return solve_square(a, Eigen::Map<const Eigen::VectorXd>(x.data(),
                                                           static_cast<Eigen::Index>(x.size())));
}

std::vector<double> affine_rule(const std::vector<std::vector<double>>& sols,
                                const std::vector<double>& k) {
  if (sols.size() < 2 || sols.size() != k.size() + 1 ||
      sols.front().size() + 1 != sols.size())
    throw std::invalid_argument("need n+1 solutions of dimension n and n constants");
  std::size_t n = k.size();
  std::vector<double> out = sols[0];
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) out[i] += k[j] * (sols[j + 1][i] - sols[0][i]);
  return out;
}

std::vector<double> affine_constants(const std::vector<double>& x,
                                     const std::vector<std::vector<double>>& sols) {
  if (sols.size() != x.size() + 1 || sols.front().size() != x.size())
    throw std::invalid_argument("need n+1 solutions of dimension n");
  std::size_t n = x.size();
  std::vector<std::vector<double>> diff(n, std::vector<double>(n));
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) diff[j][i] = sols[j + 1][i] - sols[0][i];
  for (std::size_t i = 0; i < n; ++i) b(static_cast<Eigen::Index>(i)) = x[i] - sols[0][i];
  return solve_square(solution_matrix(diff), b);
}

double pinney_I3(double x1, double x2, double v1, double v2, double k) {
  if (x1 == 0.0 || x2 == 0.0) throw std::invalid_argument("positions must be nonzero");
  double w = x1 * v2 - x2 * v1;
  double r = x2 / x1;
  return w * w + k * (r * r + 1.0 / (r * r));
}

namespace {

// (I3 - 2k)(I3 + 2k), guarded against dependent pairs.
double pinney_denominator(double i3, double k) {
  if (i3 - 2.0 * k <= 1e-9 * (std::abs(i3) + 2.0 * std::abs(k)))
    throw std::domain_error("dependent pair: pairing does not exceed 2k");
  return i3 * i3 - 4.0 * k * k;
}

double checked_sqrt(double rad, double scale, const char* what) {
  if (rad < 0.0) {
    if (rad < -1e-10 * (scale + 1.0)) throw std::domain_error(what);
    rad = 0.0;
  }
  return std::sqrt(rad);
}

}  // namespace

double pinney_two_solution_rule(double x1, double x2, double v1, double v2, double k1,
                                double k2, double k, int branch) {
  if (branch != 1 && branch != -1) throw std::invalid_argument("branch must be +1 or -1");
  double i3 = pinney_I3(x1, x2, v1, v2, k);
  double dd = pinney_denominator(i3, k);
  double lam = (k1 * k2 * i3 + k * (k1 * k1 + k2 * k2 - 1.0)) / dd;
  double bracket = i3 * x1 * x1 * x2 * x2 - k * (x1 * x1 * x1 * x1 + x2 * x2 * x2 * x2);
  double base = k1 * x1 * x1 + k2 * x2 * x2;
  double root =
      checked_sqrt(lam * bracket, base * base + std::abs(bracket), "negative radicand");
  double xsq = base + branch * 2.0 * root;
  if (!(xsq > 0.0)) {
    if (xsq > -1e-10 * (std::abs(base) + 1.0)) return 0.0;
    throw std::domain_error("rule output squared is negative");
  }
  return std::sqrt(xsq);
}

PinneyConstants pinney_two_solution_constants(double x, double v, double x1, double x2,
                                              double v1, double v2, double k) {
  double i3 = pinney_I3(x1, x2, v1, v2, k);
  double i1 = pinney_I3(x1, x, v1, v, k);
  double i2 = pinney_I3(x2, x, v2, v, k);
  double dd = pinney_denominator(i3, k);
  PinneyConstants c;
  c.k1 = (i2 * i3 - 2.0 * i1 * k) / dd;
  c.k2 = (i1 * i3 - 2.0 * i2 * k) / dd;
  c.branch = (x * x - c.k1 * x1 * x1 - c.k2 * x2 * x2 >= 0.0) ? 1 : -1;
  return c;
}

double pinney_classic_rule(double y1, double y2, double w1, double w2, double I1,
                           double I2, double k, int branch) {
  if (branch != 1 && branch != -1) throw std::invalid_argument("branch must be +1 or -1");
  double w = y1 * w2 - y2 * w1;
  if (w == 0.0) throw std::invalid_argument("zero Wronskian");
  double root = checked_sqrt(4.0 * I1 * I2 - k * w * w,
                             std::abs(4.0 * I1 * I2) + std::abs(k * w * w),
                             "negative radicand");
  double inner = I2 * y1 * y1 + I1 * y2 * y2 + branch * root * y1 * y2;
  if (!(inner > 0.0)) {
    if (inner > -1e-10 * (I2 * y1 * y1 + I1 * y2 * y2 + 1.0)) return 0.0;
    throw std::domain_error("rule output squared is negative");
  }
  return std::sqrt(2.0 * inner) / std::abs(w);
}

PinneyClassicConstants pinney_classic_constants(double x, double v, double y1, double y2,
                                                double w1, double w2, double k) {
  if (x == 0.0) throw std::invalid_argument("target position is zero");
  double w = y1 * w2 - y2 * w1;
  if (w == 0.0) throw std::invalid_argument("zero Wronskian");
  PinneyClassicConstants c;
  double a1 = y1 * v - x * w1;
  double a2 = x * w2 - y2 * v;
  c.I1 = 0.5 * (a1 * a1 + k * (y1 / x) * (y1 / x));
  c.I2 = 0.5 * (a2 * a2 + k * (y2 / x) * (y2 / x));
  // The signed radical term is branch * sqrt(...) * y1 * y2, so the branch is
  // the sign of the residual relative to the sign of y1 * y2.
  double s = 0.5 * x * x * w * w - c.I2 * y1 * y1 - c.I1 * y2 * y2;
  c.branch = (s * (y1 * y2) >= 0.0) ? 1 : -1;
  return c;
}

double pinney_mixed_constant(double x, double v, double xa, double xb, double k) {
  if (x == 0.0) throw std::invalid_argument("target position is zero");
  if (xa == 0.0 || xb == 0.0)
    throw std::invalid_argument("companion position is zero");
  if (!distinct(xa, xb)) throw std::invalid_argument("coincident companions");
  // a alone is only conserved by the part of the dynamics that leaves x
  // fixed; combining it with the reciprocal companion gap kills the rest.
  double a = x * (x - v * xa) / xa;
  return (k + a * a) * xa * xb / ((xb - xa) * x * x) - a;
}

double pinney_from_riccati(double x1, double x2, double x3, double c1, double c2,
                           double k) {
  require_distinct(x1, x2, x3);
  if (c1 == c2) throw std::domain_error("coincident pairing constants");
  // Grouping q = x1 * a keeps the formula finite when a companion passes
  // through zero (a alone blows up there, q does not).
  double q = (c1 - c2) * x2 * (x3 - x1) / (x3 - x2) - c1 * x1;
  double num = k * x1 * x1 + q * q;
  double den = (c1 - c2) * (x2 - x1) * (x3 - x1);
  double u = num * (x3 - x2) / den;
  if (!(u > 0.0)) throw std::domain_error("rule output squared is not positive");
  return std::sqrt(u);
}

double ermakov_lewis(double x, double y, double vx, double vy, double k) {
  if (x == 0.0) throw std::invalid_argument("x must be nonzero");
  double xi = y * vx - x * vy;
  return k * (y / x) * (y / x) + xi * xi;
}

double generalized_ermakov(const Expr& f, const Expr& g,
                           const std::array<double, 4>& state) {
  double x = state[0], y = state[1], vx = state[2], vy = state[3];
  if (x * y <= 0.0) throw std::domain_error("x and y must be nonzero with equal sign");
  double u = x / y;
  double xi = x * vy - y * vx;
  Env env{{"u", 0.0}};
  auto integrand = [&](double z) {
    env.set("u", 1.0 / z);
    double fv = f.eval(env);
    double gv = g.eval(env);
    return -fv / (z * z * z) + z * gv;
  };
  return 0.5 * xi * xi + integrate_simpson(integrand, 1.0, u, 1e-12);
}

// ---------------------------------------------------------------------------
// Rule objects
// ---------------------------------------------------------------------------

SuperpositionRule make_riccati_rule() {
  SuperpositionRule r;
  r.name = "riccati";
  r.m = 3;
  r.source_dim = r.target_dim = r.out_dim = 1;
  r.n_constants = 1;
  r.forward = [](double, const SuperpositionRule::Sols& s, const std::vector<double>& c) {
    return std::vector<double>{riccati_rule(s[0][0], s[1][0], s[2][0], c[0])};
  };
  r.extract = [](double, const std::vector<double>& x, const SuperpositionRule::Sols& s) {
    return std::vector<double>{riccati_constant(x[0], s[0][0], s[1][0], s[2][0])};
  };
  r.admissible = [](const SuperpositionRule::Sols& s, const std::vector<double>& c) {
    return distinct(s[0][0], s[1][0]) && distinct(s[0][0], s[2][0]) &&
           distinct(s[1][0], s[2][0]) && std::isfinite(c[0]);
  };
  return r;
}

SuperpositionRule make_linear_rule(int n) {
  if (n <= 0) throw std::invalid_argument("dimension must be positive");
  SuperpositionRule r;
  r.name = "linear";
  r.m = n;
  r.source_dim = r.target_dim = r.out_dim = n;
  r.n_constants = n;
  r.forward = [](double, const SuperpositionRule::Sols& s, const std::vector<double>& c) {
    return linear_rule(s, c);
  };
  r.extract = [](double, const std::vector<double>& x, const SuperpositionRule::Sols& s) {
    return linear_constants(x, s);
  };
  r.admissible = [](const SuperpositionRule::Sols& s, const std::vector<double>&) {
    return well_conditioned(solution_matrix(s));
  };
  return r;
}

SuperpositionRule make_affine_rule(int n) {
  if (n <= 0) throw std::invalid_argument("dimension must be positive");
  SuperpositionRule r;
  r.name = "affine";
  r.m = n + 1;
  r.source_dim = r.target_dim = r.out_dim = n;
  r.n_constants = n;
  r.forward = [](double, const SuperpositionRule::Sols& s, const std::vector<double>& c) {
    return affine_rule(s, c);
  };
  r.extract = [](double, const std::vector<double>& x, const SuperpositionRule::Sols& s) {
    return affine_constants(x, s);
  };
  r.admissible = [n](const SuperpositionRule::Sols& s, const std::vector<double>&) {
    std::vector<std::vector<double>> diff(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      diff[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i)
        diff[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
            s[static_cast<std::size_t>(j + 1)][static_cast<std::size_t>(i)] -
            s[0][static_cast<std::size_t>(i)];
    }
    return well_conditioned(solution_matrix(diff));
  };
  return r;
}

SuperpositionRule make_pinney_sr4_rule(double k) {
  if (!(k > 0.0)) throw std::invalid_argument("k must be positive");
  SuperpositionRule r;
  r.name = "pinney.sr4";
  r.m = 2;
  r.source_dim = r.target_dim = 2;
  r.out_dim = 1;
  r.n_constants = 3;  // k1, k2, branch sign
  r.forward = [k](double, const SuperpositionRule::Sols& s, const std::vector<double>& c) {
    return std::vector<double>{pinney_two_solution_rule(
        s[0][0], s[1][0], s[0][1], s[1][1], c[0], c[1], k, c[2] >= 0.0 ? 1 : -1)};
  };
  r.extract = [k](double, const std::vector<double>& x, const SuperpositionRule::Sols& s) {
    PinneyConstants c =
        pinney_two_solution_constants(x[0], x[1], s[0][0], s[1][0], s[0][1], s[1][1], k);
    return std::vector<double>{c.k1, c.k2, static_cast<double>(c.branch)};
  };
  r.admissible = [k](const SuperpositionRule::Sols& s, const std::vector<double>& c) {
    try {
      double i3 = pinney_I3(s[0][0], s[1][0], s[0][1], s[1][1], k);
      if (i3 - 2.0 * k <= 1e-6 * (i3 + 2.0 * k)) return false;
      (void)pinney_two_solution_rule(s[0][0], s[1][0], s[0][1], s[1][1], c[0], c[1], k,
                                     c[2] >= 0.0 ? 1 : -1);
    } catch (const std::exception&) {
      return false;
    }
    return true;
  };
  // The radical is proportional to the pair's instantaneous Wronskian; the
  // frozen branch sign is only valid while that Wronskian keeps one sign, so
  // report it signed and let the verifier reject windows where it crosses.
  r.health = [](double, const SuperpositionRule::Sols& s, const std::vector<double>&) {
    return s[0][0] * s[1][1] - s[1][0] * s[0][1];
  };
  return r;
}

namespace {

TdVectorField oscillator_system(const Expr& omega_sq) {
  std::vector<Expr> comp;
  comp.push_back(Expr::symbol("x2"));
  comp.push_back(-(omega_sq * Expr::symbol("x1")));
  return TdVectorField(std::move(comp));
}

TdVectorField companion_riccati_system(const Expr& omega_sq) {
  Expr x1 = Expr::symbol("x1");
  std::vector<Expr> comp;
  comp.push_back(Expr::number(1.0) + omega_sq * x1 * x1);
  return TdVectorField(std::move(comp));
}

}  // namespace

SuperpositionRule make_pinney_classic_rule(double k, std::optional<Expr> omega_sq) {
  if (!(k > 0.0)) throw std::invalid_argument("k must be positive");
  SuperpositionRule r;
  r.name = "pinney.classic";
  r.m = 2;
  r.source_dim = r.target_dim = 2;
  r.out_dim = 1;
  r.n_constants = 3;  // I1, I2, branch sign
  r.forward = [k](double, const SuperpositionRule::Sols& s, const std::vector<double>& c) {
    return std::vector<double>{pinney_classic_rule(s[0][0], s[1][0], s[0][1], s[1][1],
                                                   c[0], c[1], k, c[2] >= 0.0 ? 1 : -1)};
  };
  r.extract = [k](double, const std::vector<double>& x, const SuperpositionRule::Sols& s) {
    PinneyClassicConstants c =
        pinney_classic_constants(x[0], x[1], s[0][0], s[1][0], s[0][1], s[1][1], k);
    return std::vector<double>{c.I1, c.I2, static_cast<double>(c.branch)};
  };
  r.admissible = [k](const SuperpositionRule::Sols& s, const std::vector<double>& c) {
    double w = s[0][0] * s[1][1] - s[1][0] * s[0][1];
    double scale = 1.0 + s[0][0] * s[0][0] + s[1][0] * s[1][0] + s[0][1] * s[0][1] +
                   s[1][1] * s[1][1];
    if (std::abs(w) <= 1e-6 * scale) return false;
    try {
      (void)pinney_classic_rule(s[0][0], s[1][0], s[0][1], s[1][1], c[0], c[1], k,
                                c[2] >= 0.0 ? 1 : -1);
    } catch (const std::exception&) {
      return false;
    }
    return true;
  };
  if (omega_sq) r.source = oscillator_system(*omega_sq);
  return r;
}

SuperpositionRule make_pinney_mixed_rule(double k, std::optional<Expr> omega_sq) {
  if (!(k > 0.0)) throw std::invalid_argument("k must be positive");
  SuperpositionRule r;
  r.name = "pinney.mixed";
  r.m = 3;
  r.source_dim = 1;
  r.target_dim = 2;
  r.out_dim = 1;
  r.n_constants = 2;  // the two target/companion pairings
  r.forward = [k](double, const SuperpositionRule::Sols& s, const std::vector<double>& c) {
    return std::vector<double>{
        pinney_from_riccati(s[0][0], s[1][0], s[2][0], c[0], c[1], k)};
  };
  r.extract = [k](double, const std::vector<double>& x, const SuperpositionRule::Sols& s) {
    return std::vector<double>{pinney_mixed_constant(x[0], x[1], s[0][0], s[1][0], k),
                               pinney_mixed_constant(x[0], x[1], s[0][0], s[2][0], k)};
  };
  r.admissible = [k](const SuperpositionRule::Sols& s, const std::vector<double>& c) {
    if (!distinct(s[0][0], s[1][0]) || !distinct(s[0][0], s[2][0]) ||
        !distinct(s[1][0], s[2][0]))
      return false;
    if (!distinct(c[0], c[1])) return false;
    try {
      (void)pinney_from_riccati(s[0][0], s[1][0], s[2][0], c[0], c[1], k);
    } catch (const std::exception&) {
      return false;
    }
    return true;
  };
  if (omega_sq) r.source = companion_riccati_system(*omega_sq);
  return r;
}

SuperpositionRule sode_velocity_free_examples(const std::string& kind) {
  SuperpositionRule r;
  r.m = 2;
  r.source_dim = r.target_dim = 2;
  r.out_dim = 1;
  r.n_constants = 2;
  if (kind == "linear") {
    r.name = "sode.linear";
    r.forward = [](double, const SuperpositionRule::Sols& s, const std::vector<double>& c) {
      return std::vector<double>{c[0] * s[0][0] + c[1] * s[1][0]};
    };
    r.extract = [](double, const std::vector<double>& x, const SuperpositionRule::Sols& s) {
      auto c = solve_pair(s[0][0], s[1][0], s[0][1], s[1][1], x[0], x[1]);
      return std::vector<double>{c[0], c[1]};
    };
    r.admissible = [](const SuperpositionRule::Sols& s, const std::vector<double>&) {
      double det = s[0][0] * s[1][1] - s[1][0] * s[0][1];
      double scale = 1.0 + std::abs(s[0][0] * s[1][1]) + std::abs(s[1][0] * s[0][1]);
      return std::abs(det) > 1e-6 * scale;
    };
    return r;
  }
  if (kind == "reciprocal") {
    r.name = "sode.reciprocal";
    r.forward = [](double, const SuperpositionRule::Sols& s, const std::vector<double>& c) {
      double y1 = s[0][0], y2 = s[1][0];
      if (y1 == 0.0 || y2 == 0.0) throw std::domain_error("companion touches zero");
      double den = c[0] / y1 + c[1] / y2;
      if (den == 0.0) throw std::domain_error("rule output escapes to infinity");
      return std::vector<double>{1.0 / den};
    };
    r.extract = [](double, const std::vector<double>& x, const SuperpositionRule::Sols& s) {
      double y1 = s[0][0], y2 = s[1][0], y = x[0];
      if (y1 == 0.0 || y2 == 0.0 || y == 0.0)
        throw std::invalid_argument("states must avoid zero");
      // In u = 1/y the rule is linear, so the constants solve the transformed
      // two-by-two system with u' = -y'/y^2.
      auto c = solve_pair(1.0 / y1, 1.0 / y2, -s[0][1] / (y1 * y1), -s[1][1] / (y2 * y2),
                          1.0 / y, -x[1] / (y * y));
      return std::vector<double>{c[0], c[1]};
    };
    r.admissible = [](const SuperpositionRule::Sols& s, const std::vector<double>& c) {
      double y1 = s[0][0], y2 = s[1][0];
      if (y1 == 0.0 || y2 == 0.0) return false;
      double u1 = 1.0 / y1, u2 = 1.0 / y2;
      double du1 = -s[0][1] / (y1 * y1), du2 = -s[1][1] / (y2 * y2);
      double det = u1 * du2 - u2 * du1;
      if (std::abs(det) <= 1e-6 * (1.0 + std::abs(u1 * du2) + std::abs(u2 * du1)))
        return false;
      return std::abs(c[0] * u1 + c[1] * u2) > 1e-9 * (1.0 + std::abs(c[0] * u1));
    };
    return r;
  }
  throw std::invalid_argument("unknown kind: " + kind);
}

SuperpositionRule make_rule(const std::string& name, int n, double k) {
  if (name == "riccati") return make_riccati_rule();
  if (name == "linear") return make_linear_rule(n);
  if (name == "affine") return make_affine_rule(n);
  if (name == "pinney.sr4") return make_pinney_sr4_rule(k);
  if (name == "pinney.classic") return make_pinney_classic_rule(k);
  if (name == "pinney.mixed") return make_pinney_mixed_rule(k);
  if (name == "sode.linear") return sode_velocity_free_examples("linear");
  if (name == "sode.reciprocal") return sode_velocity_free_examples("reciprocal");
  throw std::invalid_argument("unknown rule: " + name);
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

std::string VerificationReport::to_string() const {
  std::ostringstream os;
  os << "rule '" << rule_name << "' on {" << system << "}: " << completed << "/" << trials
     << " trials completed (" << skipped << " skipped), max rel error " << max_rel_error
     << " at tol " << tol << " -> " << (passed ? "PASS" : "FAIL");
  return os.str();
}

namespace {

// One verification trial; returns the worst relative error or -1 when every
// redraw hit a singular configuration.  Must not throw: it runs inside a
// parallel loop.
double run_trial(const SuperpositionRule& rule, const TdVectorField& system,
                 const TdVectorField& src, double horizon, const VerifyOptions& opt,
                 const std::function<void(Rng&, std::span<double>)>& target_ic,
                 const std::function<void(Rng&, std::span<double>)>& source_ic,
                 Rng rng) noexcept {
  IntegrateOptions io;
  io.tol = opt.ode_tol;
  const int ns = std::max(2, opt.samples);
  const double t0 = opt.t0;

  for (int attempt = 0; attempt < std::max(1, opt.attempts_per_trial); ++attempt) {
    try {
      SuperpositionRule::Sols sols0(static_cast<std::size_t>(rule.m),
                                    std::vector<double>(static_cast<std::size_t>(rule.source_dim)));
      std::vector<double> tgt0(static_cast<std::size_t>(rule.target_dim));
      for (auto& s : sols0) source_ic(rng, s);
      target_ic(rng, tgt0);

      std::vector<Trajectory> comp;
      comp.reserve(static_cast<std::size_t>(rule.m));
      bool ok = true;
      for (int j = 0; j < rule.m && ok; ++j) {
        Trajectory tr = integrate(src, t0, sols0[static_cast<std::size_t>(j)],
                                  t0 + horizon, io);
        if (tr.stop() != StopReason::ReachedEnd) ok = false;
        else comp.push_back(std::move(tr));
      }
      if (!ok) continue;
      Trajectory truth = integrate(system, t0, tgt0, t0 + horizon, io);
      if (truth.stop() != StopReason::ReachedEnd) continue;

      std::vector<double> consts = rule.extract(t0, tgt0, sols0);
      if (rule.admissible && !rule.admissible(sols0, consts)) continue;

      double err = 0.0;
      double hmin = std::numeric_limits<double>::infinity(), hmax = 0.0;
      double hsign = 0.0;
      bool bad = false;
      SuperpositionRule::Sols st(static_cast<std::size_t>(rule.m),
                                 std::vector<double>(static_cast<std::size_t>(rule.source_dim)));
      std::vector<double> tt(static_cast<std::size_t>(rule.target_dim));
      for (int q = 0; q < ns && !bad; ++q) {
        double t = t0 + horizon * q / (ns - 1);
        for (int j = 0; j < rule.m; ++j)
          comp[static_cast<std::size_t>(j)].sample(t, st[static_cast<std::size_t>(j)]);
        truth.sample(t, tt);
        std::vector<double> rec = rule.forward(t, st, consts);
        for (int c = 0; c < rule.out_dim && !bad; ++c) {
          double r = rec[static_cast<std::size_t>(c)];
          double w = tt[static_cast<std::size_t>(c)];
          if (!std::isfinite(r)) bad = true;
          else err = std::max(err, std::abs(r - w) / (1.0 + std::abs(w)));
        }
        if (rule.health) {
          double h = rule.health(t, st, consts);
          if (hsign == 0.0 && h != 0.0) hsign = (h > 0.0) ? 1.0 : -1.0;
          if (h * hsign < 0.0) bad = true;
          hmin = std::min(hmin, std::abs(h));
          hmax = std::max(hmax, std::abs(h));
        }
      }
      if (bad) continue;
      // A margin that changes sign or dips near zero means the branch frozen
      // at extraction time stops being the right one somewhere inside the
      // horizon; the reconstruction is unreliable there, so retry the draw.
      if (rule.health && hmin < 1e-4 * std::max(hmax, 1e-300)) continue;
      return err;
    } catch (const std::exception&) {
      continue;
    }
  }
  return -1.0;
}

}  // namespace

VerificationReport verify_rule(const SuperpositionRule& rule, const TdVectorField& system,
                               int trials, double horizon, double tol,
                               const VerifyOptions& opt) {
  if (!rule.forward || !rule.extract) throw std::invalid_argument("incomplete rule");
  if (trials <= 0) throw std::invalid_argument("trials must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (system.dim() != rule.target_dim)
    throw std::invalid_argument("system dimension does not match the rule");
  const TdVectorField& src = rule.source ? *rule.source : system;
  if (src.dim() != rule.source_dim)
    throw std::invalid_argument("companion dimension does not match the rule");

  std::function<void(Rng&, std::span<double>)> target_ic =
      opt.target_ic ? opt.target_ic : [](Rng& rng, std::span<double> out) {
        for (double& v : out) v = rng.uniform(-2.0, 2.0);
      };
  std::function<void(Rng&, std::span<double>)> source_ic =
      opt.source_ic ? opt.source_ic : target_ic;

  Rng base(opt.seed);
  std::vector<double> errs(static_cast<std::size_t>(trials), -1.0);
  parallel_for(
      static_cast<std::size_t>(trials),
      [&](std::size_t i) {
        errs[i] = run_trial(rule, system, src, horizon, opt, target_ic, source_ic,
                            base.fork(i));
      },
      opt.parallel);

  VerificationReport rep;
  rep.rule_name = rule.name;
  rep.system = system.describe();
  rep.trials = trials;
  rep.tol = tol;
  for (double e : errs) {
    if (e < 0.0) ++rep.skipped;
    else {
      ++rep.completed;
      rep.max_rel_error = std::max(rep.max_rel_error, e);
    }
  }
  if (rep.completed == 0)
    throw std::runtime_error("verify_rule: every trial hit a singular configuration");
  rep.passed = rep.max_rel_error <= tol;
  return rep;
}

}  // namespace liekit
