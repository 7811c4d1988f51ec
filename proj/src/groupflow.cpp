#include "liekit/groupflow.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <utility>

namespace liekit {

namespace {

using Cplx = std::complex<double>;

Eigen::MatrixXcd real2(double a00, double a01, double a10, double a11) {
  Eigen::MatrixXcd m(2, 2);
  m << Cplx(a00), Cplx(a01), Cplx(a10), Cplx(a11);
  return m;
}

std::vector<Eigen::MatrixXcd> sl2_basis() {
  return {real2(0, -1, 0, 0), real2(-0.5, 0, 0, 0.5), real2(0, 0, 1, 0)};
}

StructureTable sl2_table() {
  auto t = StructureTable::zeros(3);
  auto set = [&](int a, int b, int g, const Rat& v) {
    t.at(a, b, g) = v;
    t.at(b, a, g) = -v;
  };
  set(0, 1, 0, 1);  // [a1, a2] = a1
  set(0, 2, 1, 2);  // [a1, a3] = 2 a2
  set(1, 2, 2, 1);  // [a2, a3] = a3
  return t;
}

std::vector<Eigen::MatrixXcd> su2_basis() {
  const Cplx i(0.0, 1.0);
  Eigen::MatrixXcd v1(2, 2), v2(2, 2), v3(2, 2);
  v1 << Cplx(0), 0.5 * i, 0.5 * i, Cplx(0);
  v2 << Cplx(0), Cplx(0.5), Cplx(-0.5), Cplx(0);
  v3 << 0.5 * i, Cplx(0), Cplx(0), -0.5 * i;
  return {v1, v2, v3};
}

StructureTable su2_table() {
  auto t = StructureTable::zeros(3);
  auto set = [&](int a, int b, int g, const Rat& v) {
    t.at(a, b, g) = v;
    t.at(b, a, g) = -v;
  };
  set(0, 1, 2, -1);  // [v1, v2] = -v3
  set(1, 2, 0, -1);  // [v2, v3] = -v1
  set(2, 0, 1, -1);  // [v3, v1] = -v2
  return t;
}

std::vector<Eigen::MatrixXcd> sl3_basis() {
  auto m = [](std::initializer_list<double> vals) {
    Eigen::MatrixXcd out(3, 3);
    int k = 0;
    for (double v : vals) out(k / 3, k % 3) = Cplx(v), ++k;
    return out;
  };
  return {
      m({0, -1, 0, 0, 0, -1, 0, 0, 0}),
      m({0, 0, 0, 0, 0, 0, -1, 0, 0}),
      m({0, 0, 0, 1, 0, 0, 0, -1, 0}),
      m({1.0 / 3, 0, 0, 0, -2.0 / 3, 0, 0, 0, 1.0 / 3}),
      m({0, 1, 0, 0, 0, -1, 0, 0, 0}),
      m({0, 0, 2, 0, 0, 0, 0, 0, 0}),
      m({0, 0, 0, -1, 0, 0, 0, -1, 0}),
      m({2, 0, 0, 0, 0, 0, 0, 0, -2}),
  };
}

StructureTable sl3_table() {
  auto t = StructureTable::zeros(8);
  // Entries are 1-based below to match the usual labelling M1..M8.
  auto set = [&](int a, int b, int g, const Rat& v) {
    t.at(a - 1, b - 1, g - 1) = v;
    t.at(b - 1, a - 1, g - 1) = -v;
  };
  set(1, 2, 3, 1);
  set(1, 3, 4, -3);
  set(1, 4, 5, 1);
  set(1, 5, 6, 1);
  set(1, 7, 8, Rat(1, 2));
  set(1, 8, 1, -2);
  set(2, 5, 7, 1);
  set(2, 6, 8, 1);
  set(2, 8, 2, 4);
  set(3, 4, 7, -1);
  set(3, 5, 8, Rat(-1, 2));
  set(3, 6, 1, -2);
  set(3, 7, 2, -2);
  set(3, 8, 3, 2);
  set(4, 5, 1, -1);
  set(4, 7, 3, 1);
  set(5, 7, 4, -3);
  set(5, 8, 5, -2);
  set(6, 7, 5, -2);
  set(6, 8, 6, -4);
  set(7, 8, 7, 2);
  return t;
}

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

// |det - 1| for the special linear groups, max-norm unitarity defect for SU2.
double group_defect(GroupTag tag, const Eigen::MatrixXcd& a) {
  switch (tag) {
    case GroupTag::SL2R:
    case GroupTag::SL3R:
      return std::abs(a.determinant() - Cplx(1.0));
    case GroupTag::SU2: {
      Eigen::MatrixXcd g = a.adjoint() * a;
      g -= Eigen::MatrixXcd::Identity(a.rows(), a.cols());
      return max_abs(g);
    }
    case GroupTag::GLMatrix:
      return 0.0;
  }
  return 0.0;
}

void project_onto_group(GroupTag tag, Eigen::MatrixXcd& a) {
  const auto d = a.rows();
  switch (tag) {
    case GroupTag::SL2R:
    case GroupTag::SL3R: {
      // Rescale by the principal d-th root; the determinant sits near 1, so
      // the root is well away from the branch cut.
      a /= std::pow(a.determinant(), 1.0 / static_cast<double>(d));
      break;
    }
    case GroupTag::SU2: {
      for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
          const Cplx overlap = a.col(i).dot(a.col(j));
          a.col(j) -= overlap * a.col(i);
        }
        a.col(j).normalize();
      }
      // Columns are now orthonormal, so det has unit modulus; divide out its
      // principal d-th root to land in the special unitary group.
      a /= std::pow(a.determinant(), 1.0 / static_cast<double>(d));
      break;
    }
    case GroupTag::GLMatrix:
      break;
  }
}

// Shared residue check for the closed-form charts evaluated in complex
// arithmetic: the result must land back on the real axis.
double real_branch(Cplx z, const char* chart) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) ||
      std::abs(z.imag()) > 1e-9 * (1.0 + std::abs(z.real()))) {
    throw std::domain_error(std::string(chart) +
                            ": factorization chart breaks down here");
  }
  return z.real();
}

}  // namespace

void LieGroupEquation::validate() const {
  if (basis.empty()) {
    throw std::invalid_argument("group equation needs a nonempty basis");
  }
  const auto d = basis[0].rows();
  if (d == 0 || basis[0].cols() != d) {
    throw std::invalid_argument("basis matrices must be square");
  }
  for (const auto& m : basis) {
    if (m.rows() != d || m.cols() != d) {
      throw std::invalid_argument("basis matrices must share one shape");
    }
  }
  if (coeffs.size() != basis.size()) {
    throw std::invalid_argument("coefficient count must match basis size");
  }
  const int r = static_cast<int>(basis.size());
  if (table.dim != r ||
      table.c.size() != static_cast<std::size_t>(r) * r * r) {
    throw std::invalid_argument("commutation table size mismatch");
  }
  for (int a = 0; a < r; ++a) {
    for (int b = 0; b < r; ++b) {
      for (int g = 0; g < r; ++g) {
        if (table.at(a, b, g) + table.at(b, a, g) != 0) {
          throw std::invalid_argument("commutation table is not antisymmetric");
        }
      }
    }
  }
  for (int a = 0; a < r; ++a) {
    for (int b = a + 1; b < r; ++b) {
      Eigen::MatrixXcd defect = basis[a] * basis[b] - basis[b] * basis[a];
      for (int g = 0; g < r; ++g) {
        defect -= table.at(a, b, g).convert_to<double>() * basis[g];
      }
      if (max_abs(defect) > 1e-12) {
        throw std::invalid_argument(
            "basis matrices break the declared commutation relations");
      }
    }
  }
  const bool special = tag != GroupTag::GLMatrix;
  if ((tag == GroupTag::SL2R || tag == GroupTag::SU2) && d != 2) {
    throw std::invalid_argument("basis shape disagrees with the group tag");
  }
  if (tag == GroupTag::SL3R && d != 3) {
    throw std::invalid_argument("basis shape disagrees with the group tag");
  }
  for (const auto& m : basis) {
    if (special && std::abs(m.trace()) > 1e-12) {
      throw std::invalid_argument("special-group generators must be traceless");
    }
    if ((tag == GroupTag::SL2R || tag == GroupTag::SL3R) &&
        m.imag().cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("real-group generators must be real");
    }
    if (tag == GroupTag::SU2 && max_abs(m + m.adjoint()) > 1e-12) {
      throw std::invalid_argument("su(2) generators must be skew-Hermitian");
    }
  }
}

LieGroupEquation group_equation_preset(const std::string& name,
                                       std::vector<Expr> coeffs) {
  LieGroupEquation eq;
  if (name == "sl2r.a1a2a3") {
    eq.tag = GroupTag::SL2R;
    eq.basis = sl2_basis();
    eq.table = sl2_table();
  } else if (name == "su2.v1v2v3") {
    eq.tag = GroupTag::SU2;
    eq.basis = su2_basis();
    eq.table = su2_table();
  } else if (name == "sl3r.painleve") {
    eq.tag = GroupTag::SL3R;
    eq.basis = sl3_basis();
    eq.table = sl3_table();
  } else {
    throw std::invalid_argument("unknown group preset: " + name);
  }
  if (coeffs.size() != eq.basis.size()) {
    throw std::invalid_argument("preset " + name + " expects " +
                                std::to_string(eq.basis.size()) +
                                " coefficients");
  }
  eq.coeffs = std::move(coeffs);
  eq.validate();
  return eq;
}

GroupTrajectory solve_group_equation(const LieGroupEquation& eq, double t1,
                                     const IntegrateOptions& opt) {
  eq.validate();
  const auto d = eq.basis[0].rows();
  const int n = static_cast<int>(2 * d * d);

  Env env{{"t", 0.0}};
  Eigen::MatrixXcd a(d, d), bmat(d, d), da(d, d);
  OdeSystem sys;
  sys.dim = n;
  sys.rhs = [&](double t, std::span<const double> x, std::span<double> dx) {
    env.set("t", t);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        const auto k = 2 * (r * d + c);
        a(r, c) = Cplx(x[k], x[k + 1]);
      }
    }
    bmat.setZero();
    for (std::size_t al = 0; al < eq.basis.size(); ++al) {
      bmat += eq.coeffs[al].eval(env) * eq.basis[al];
    }
    da.noalias() = -(bmat * a);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        const auto k = 2 * (r * d + c);
        dx[k] = da(r, c).real();
        dx[k + 1] = da(r, c).imag();
      }
    }
  };

  GroupTrajectory out;
  out.tag = eq.tag;
  out.times.push_back(0.0);
  out.mats.push_back(Eigen::MatrixXcd::Identity(d, d));
  out.residuals.push_back(0.0);
  if (t1 == 0.0) return out;

  const int nseg = std::clamp(
      static_cast<int>(std::ceil(std::fabs(t1) / 0.05)), 8, 4096);
  Eigen::MatrixXcd cur = out.mats.back();
  std::vector<double> x0(static_cast<std::size_t>(n));
  for (int seg = 1; seg <= nseg; ++seg) {
    const double ta = t1 * (seg - 1) / nseg;
    const double tb = t1 * seg / nseg;
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        const auto k = static_cast<std::size_t>(2 * (r * d + c));
        x0[k] = cur(r, c).real();
        x0[k + 1] = cur(r, c).imag();
      }
    }
    Trajectory tr = integrate(sys, ta, x0, tb, opt);
    if (tr.stop() != StopReason::ReachedEnd) {
      throw std::runtime_error(
          "group equation blew up near t = " + std::to_string(tr.end_time()));
    }
    const auto& xf = tr.final_state();
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        const auto k = static_cast<std::size_t>(2 * (r * d + c));
        cur(r, c) = Cplx(xf[k], xf[k + 1]);
      }
    }
    const double defect = group_defect(eq.tag, cur);
    if (!(defect <= 1e-6)) {
      throw std::runtime_error(
          "solution drifted off the group (defect " + std::to_string(defect) +
          " at t = " + std::to_string(tb) + ")");
    }
    project_onto_group(eq.tag, cur);
    out.times.push_back(tb);
    out.mats.push_back(cur);
    out.residuals.push_back(defect);
  }
  return out;
}

double act(const Eigen::Matrix2d& a, double x) {
  const double al = a(0, 0), be = a(0, 1), ga = a(1, 0), de = a(1, 1);
  if (std::isinf(x)) {
    if (ga == 0.0) return std::numeric_limits<double>::infinity();
    return al / ga;
  }
  const double den = ga * x + de;
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return (al * x + be) / den;
}

Eigen::Vector2d act(const Eigen::Matrix2d& a, const Eigen::Vector2d& xv) {
  return a * xv;
}

Eigen::Vector2cd act(const Eigen::Matrix2cd& a, const Eigen::Vector2cd& psi) {
  return a * psi;
}

Eigen::Vector4d su2_real_coordinates(const Eigen::Matrix2cd& g) {
  Eigen::Vector4d out;
  out << g(0, 0).real(), g(0, 1).real(), g(0, 0).imag(), g(0, 1).imag();
  return out;
}

namespace {

WeiNormanResult finish_wei_norman(Trajectory tr) {
  WeiNormanResult res;
  if (tr.stop() == StopReason::MaxSteps) {
    throw std::runtime_error("Wei-Norman exponents exceeded the step budget");
  }
  if (tr.stop() == StopReason::Singularity) {
    res.pole = true;
    res.pole_time = tr.end_time();
  }
  res.v = std::move(tr);
  return res;
}

}  // namespace

WeiNormanResult wei_norman_sl2(const Expr& b1, const Expr& b2, const Expr& b3,
                               double t1, const IntegrateOptions& opt) {
  Env env{{"t", 0.0}};
  OdeSystem sys;
  sys.dim = 3;
  sys.rhs = [&](double t, std::span<const double> v, std::span<double> dv) {
    env.set("t", t);
    const double c1 = b1.eval(env), c2 = b2.eval(env), c3 = b3.eval(env);
    dv[0] = c1 + c2 * v[0] + c3 * v[0] * v[0];
    dv[1] = c2 + 2.0 * c3 * v[0];
    dv[2] = std::exp(v[1]) * c3;
  };
  const double zero[3] = {0.0, 0.0, 0.0};
  return finish_wei_norman(integrate(sys, 0.0, zero, t1, opt));
}

WeiNormanResult wei_norman_quadratic(const std::array<Expr, 6>& b, double t1,
                                     const IntegrateOptions& opt) {
  Env env{{"t", 0.0}};
  OdeSystem sys;
  sys.dim = 6;
  sys.rhs = [&](double t, std::span<const double> v, std::span<double> dv) {
    env.set("t", t);
    double c[6];
    for (int k = 0; k < 6; ++k) c[k] = b[static_cast<std::size_t>(k)].eval(env);
    dv[0] = c[0] + c[1] * v[0] + c[2] * v[0] * v[0];
    dv[1] = c[1] + 2.0 * c[2] * v[0];
    dv[2] = std::exp(v[1]) * c[2];
    dv[3] = c[3] + 0.5 * c[1] * v[3] + c[0] * v[4];
    dv[4] = c[4] - c[2] * v[3] - 0.5 * c[1] * v[4];
    dv[5] = c[5] - c[4] * v[3] + 0.5 * c[2] * v[3] * v[3] -
            0.5 * c[0] * v[4] * v[4];
  };
  const double zero[6] = {0, 0, 0, 0, 0, 0};
  return finish_wei_norman(integrate(sys, 0.0, zero, t1, opt));
}

Eigen::Matrix2d wei_norman_sl2_matrix(double v1, double v2, double v3) {
  const double ep = std::exp(0.5 * v2), em = std::exp(-0.5 * v2);
  Eigen::Matrix2d g;
  g << ep - v1 * v3 * em, v1 * em, -v3 * em, em;
  return g;
}

std::array<double, 4> heisenberg_quadratures(const Expr& m, const Expr& s,
                                             double t1) {
  Env env{{"t", 0.0}};
  OdeSystem sys;
  sys.dim = 4;
  sys.rhs = [&](double t, std::span<const double> v, std::span<double> dv) {
    env.set("t", t);
    const double minv = 1.0 / m.eval(env);
    const double sv = s.eval(env);
    dv[0] = minv;
    dv[1] = minv * v[2];
    dv[2] = sv;
    dv[3] = -sv * v[1] - 0.5 * minv * v[2] * v[2];
  };
  IntegrateOptions opt;
  opt.tol = 1e-12;
  const double zero[4] = {0, 0, 0, 0};
  Trajectory tr = integrate(sys, 0.0, zero, t1, opt);
  if (tr.stop() != StopReason::ReachedEnd) {
    throw std::runtime_error(
        "quadrature cascade failed (mass hit zero or the force blew up)");
  }
  const auto& f = tr.final_state();
  return {f[0], f[1], f[2], f[3]};
}

std::array<double, 3> caldirola_kanai_closed(double m0, double r, double w0,
                                             double t) {
  if (m0 <= 0.0) throw std::invalid_argument("mass scale must be positive");
  if (t == 0.0) return {0.0, 0.0, 0.0};
  const double disc = r * r - 4.0 * w0 * w0;
  if (disc == 0.0) {
    // Critically damped limit of the formulas below.
    const double den = 1.0 + 0.5 * r * t;
    if (den <= 0.0) {
      throw std::domain_error("caldirola-kanai: chart pole at t = -2/r");
    }
    return {std::exp(r * t) * t / (m0 * den), r * t - 2.0 * std::log(den),
            m0 * w0 * w0 * t / den};
  }
  const Cplx wb = std::sqrt(Cplx(disc, 0.0));
  const Cplx sh = std::sinh(0.5 * t * wb);
  const Cplx ch = std::cosh(0.5 * t * wb);
  const Cplx den = r * sh + wb * ch;
  const Cplx v1 = 2.0 * std::exp(r * t) * sh / (m0 * den);
  const Cplx v2 = r * t + 2.0 * (std::log(wb) - std::log(den));
  const Cplx v3 = 2.0 * m0 * w0 * w0 * sh / den;
  return {real_branch(v1, "caldirola-kanai"),
          real_branch(v2, "caldirola-kanai"),
          real_branch(v3, "caldirola-kanai")};
}

std::array<double, 3> tplusk_closed(double m, double w0, double k, double t) {
  if (m <= 0.0) throw std::invalid_argument("mass must be positive");
  if (k <= 0.0) throw std::invalid_argument("offset k must be positive");
  if (t <= -k) {
    throw std::invalid_argument("time must stay right of the mass singularity");
  }
  if (t == 0.0) return {0.0, 0.0, 0.0};
  const double disc = 1.0 - 4.0 * w0 * w0;
  if (disc == 0.0) {
    const double ratio = std::log1p(t / k);
    const double den = 2.0 + ratio;
    if (den <= 0.0) throw std::domain_error("tplusk: chart pole");
    return {2.0 * (k + t) * ratio / (m * den),
            ratio + 2.0 * std::log(2.0) - 2.0 * std::log(den),
            (2.0 * m * w0 * w0 / k) * ratio / den};
  }
  const Cplx wb = std::sqrt(Cplx(disc, 0.0));
  const Cplx kp = std::pow(Cplx(k, 0.0), wb);
  const Cplx tp = std::pow(Cplx(k + t, 0.0), wb);
  const Cplx den = kp * (wb - 1.0) + tp * (wb + 1.0);
  const Cplx v1 = 2.0 * (k + t) * (tp - kp) / (m * den);
  const Cplx v2 = (1.0 + wb) * std::log(Cplx(k + t, 0.0)) -
                  (1.0 + wb) * std::log(Cplx(k, 0.0)) +
                  2.0 * std::log(2.0 * kp * wb) - 2.0 * std::log(den);
  const Cplx v3 = (2.0 * m * w0 * w0 / k) * (tp - kp) / den;
  return {real_branch(v1, "tplusk"), real_branch(v2, "tplusk"),
          real_branch(v3, "tplusk")};
}

std::array<Expr, 3> transform_coefficients(const std::array<Expr, 4>& abar,
                                           const std::array<Expr, 3>& b,
                                           double check_t0, double check_t1) {
  const Expr& al = abar[0];
  const Expr& be = abar[1];
  const Expr& ga = abar[2];
  const Expr& de = abar[3];
  const Expr det = al * de - be * ga;
  Env env{{"t", 0.0}};
  const int samples = 33;
  for (int i = 0; i < samples; ++i) {
    const double t = check_t0 + (check_t1 - check_t0) * i / (samples - 1);
    env.set("t", t);
    if (std::abs(det.eval(env) - 1.0) > 1e-10) {
      throw std::invalid_argument(
          "transform curve must have unit determinant on the check window");
    }
  }
  const Expr dal = al.diff("t"), dbe = be.diff("t");
  const Expr dga = ga.diff("t"), dde = de.diff("t");
  const Expr two = Expr::number(2.0);
  std::array<Expr, 3> out;
  out[0] = be * be * b[2] - al * be * b[1] + al * al * b[0] + al * dbe -
           be * dal;
  out[1] = -(two * be * de * b[2]) + (al * de + be * ga) * b[1] -
           two * al * ga * b[0] + de * dal - al * dde + be * dga - ga * dbe;
  out[2] = de * de * b[2] - de * ga * b[1] + ga * ga * b[0] + ga * dde -
           de * dga;
  return out;
}

Sl2Reduction::Sl2Reduction(Trajectory alpha) : alpha_(std::move(alpha)) {}

double Sl2Reduction::reduced_b1(double t) const {
  const double a = alpha_.sample(t)[0];
  return 1.0 / (a * a);
}

double Sl2Reduction::log_alpha(double t) const {
  return std::log(std::fabs(alpha_.sample(t)[0]));
}

double Sl2Reduction::ratio(double t) const {
  const auto x = alpha_.sample(t);
  return x[1] / x[0];
}

Eigen::Matrix2d Sl2Reduction::frame(double t) const {
  const auto x = alpha_.sample(t);
  Eigen::Matrix2d f;
  f << x[0], 0.0, x[1], 1.0 / x[0];
  return f;
}

double Sl2Reduction::t0() const { return alpha_.start_time(); }
double Sl2Reduction::t1() const { return alpha_.end_time(); }

Sl2Reduction sl2_reduction_oscillator(const Expr& omega_sq,
                                      const Trajectory& alpha) {
  const auto& ts = alpha.times();
  if (ts.size() < 2 || alpha.state(0).size() != 2) {
    throw std::invalid_argument(
        "reduction needs a (position, velocity) trajectory");
  }
  double amin = std::numeric_limits<double>::infinity(), amax = 0.0;
  bool sign_change = false;
  double prev = alpha.state(0)[0];
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double ak = alpha.state(k)[0];
    amin = std::min(amin, std::fabs(ak));
    amax = std::max(amax, std::fabs(ak));
    if (ak == 0.0 || (ak > 0) != (prev > 0)) sign_change = true;
    prev = ak;
  }
  if (sign_change || amin < 0.08 * amax) {
    throw std::domain_error(
        "reduction solution vanishes (or nearly vanishes) on the window; "
        "pick a different particular solution");
  }
  // Light consistency check that (position, velocity) actually solves
  // x'' = -W^2(t) x, via a centered difference of the velocity component.
  Env env{{"t", 0.0}};
  const double t0 = alpha.start_time(), t1 = alpha.end_time();
  const double h = (t1 - t0) * 1e-5;
  for (int i = 1; i <= 9; ++i) {
    const double t = t0 + (t1 - t0) * i / 10.0;
    const double dv =
        (alpha.sample(t + h)[1] - alpha.sample(t - h)[1]) / (2.0 * h);
    env.set("t", t);
    const double want = -omega_sq.eval(env) * alpha.sample(t)[0];
    if (std::fabs(dv - want) > 1e-4 * (1.0 + std::fabs(want))) {
      throw std::invalid_argument(
          "trajectory does not solve the stated oscillator");
    }
  }
  return Sl2Reduction(alpha);
}

}  // namespace liekit
