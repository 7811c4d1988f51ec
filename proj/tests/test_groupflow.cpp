// Matrix Lie-group equations and their charts: the matrix exponential, the
// preset bases, transport of initial conditions through group actions, the
// Wei-Norman exponent systems with their closed-form special cases, the
// coefficient transformation law, and the oscillator reduction.

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "liekit/expr.hpp"
#include "liekit/groupflow.hpp"
#include "liekit/quad.hpp"
#include "liekit/rng.hpp"
#include "liekit/specfun.hpp"

using liekit::act;
using liekit::caldirola_kanai_closed;
using liekit::Env;
using liekit::expm;
using liekit::Expr;
using liekit::group_equation_preset;
using liekit::GroupTag;
using liekit::GroupTrajectory;
using liekit::heisenberg_quadratures;
using liekit::integrate;
using liekit::integrate_simpson;
using liekit::IntegrateOptions;
using liekit::LieGroupEquation;
using liekit::OdeSystem;
using liekit::Rng;
using liekit::Sl2Reduction;
using liekit::sl2_reduction_oscillator;
using liekit::solve_group_equation;
using liekit::StopReason;
using liekit::StructureTable;
using liekit::su2_real_coordinates;
using liekit::tplusk_closed;
using liekit::Trajectory;
using liekit::transform_coefficients;
using liekit::wei_norman_quadratic;
using liekit::wei_norman_sl2;
using liekit::wei_norman_sl2_matrix;
using liekit::WeiNormanResult;

namespace {

const double kPi = 3.14159265358979323846;

Expr num(double v) { return Expr::number(v); }
Expr tvar() { return Expr::symbol("t"); }

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::Matrix2d real_part2(const Eigen::MatrixXcd& m) {
  Eigen::Matrix2d out;
  out << m(0, 0).real(), m(0, 1).real(), m(1, 0).real(), m(1, 1).real();
  return out;
}

// Distance on the projective line: both arguments are folded to angles in
// [0, pi) so the single point at infinity compares equal to itself and huge
// values sit close to it.
double mobius_gap(double u, double v) {
  const double a = std::isinf(u) ? kPi / 2 : std::atan(u);
  const double b = std::isinf(v) ? kPi / 2 : std::atan(v);
  double d = std::fabs(a - b);
  return std::min(d, kPi - d);
}

Eigen::Matrix2d random_sl2(Rng& rng) {
  Eigen::MatrixXd m(2, 2);
  const double c1 = rng.uniform(-1.0, 1.0);
  const double c2 = rng.uniform(-1.0, 1.0);
  const double c3 = rng.uniform(-1.0, 1.0);
  m << -0.5 * c2, -c1, c3, 0.5 * c2;
  return expm(m);
}

// A smooth scalar coefficient with bounded values and derivatives.
Expr random_coeff(Rng& rng) {
  const double a = rng.uniform(-0.8, 0.8);
  const double b = rng.uniform(-0.6, 0.6);
  const double w = rng.uniform(0.5, 2.0);
  return num(a) + num(b) * sin(num(w) * tvar());
}

}  // namespace

TEST_CASE("matrix exponential against hand oracles") {
  SUBCASE("plane rotation") {
    const double th = 0.7;
    Eigen::MatrixXd a(2, 2);
    a << 0, -th, th, 0;
    const Eigen::MatrixXd e = expm(a);
    CHECK(e(0, 0) == doctest::Approx(std::cos(th)).epsilon(1e-15));
    CHECK(e(0, 1) == doctest::Approx(-std::sin(th)).epsilon(1e-15));
    CHECK(e(1, 0) == doctest::Approx(std::sin(th)).epsilon(1e-15));
    CHECK(e(1, 1) == doctest::Approx(std::cos(th)).epsilon(1e-15));
  }

  SUBCASE("nilpotent block stops at the linear term") {
    Eigen::MatrixXd a(2, 2);
    a << 0, 1, 0, 0;
    const Eigen::MatrixXd e = expm(a);
    CHECK(e(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e(1, 0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(e(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("diagonal matrices exponentiate entrywise") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
    a(0, 0) = 0.3;
    a(1, 1) = -1.7;
    a(2, 2) = 2.0;
    const Eigen::MatrixXd e = expm(a);
    for (int i = 0; i < 3; ++i) {
      CHECK(e(i, i) == doctest::Approx(std::exp(a(i, i))).epsilon(1e-14));
    }
    CHECK(std::fabs(e(0, 1)) + std::fabs(e(1, 2)) + std::fabs(e(2, 0)) <
          1e-14);
  }

  SUBCASE("inverse pairs multiply to the identity") {
    Rng rng(20260814u);
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::MatrixXd a(3, 3);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) a(i, j) = rng.uniform(-1.5, 1.5);
      }
      const Eigen::MatrixXd p = expm(a) * expm((-a).eval());
      CHECK((p - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }

  SUBCASE("squaring path agrees with the doubled argument") {
    Eigen::MatrixXd a(2, 2);
    a << 0.9, -1.4, 2.2, 0.4;  // norm well above the scaling threshold
    const Eigen::MatrixXd e1 = expm(a);
    const Eigen::MatrixXd e2 = expm((2.0 * a).eval());
    CHECK(((e1 * e1) - e2).cwiseAbs().maxCoeff() < 1e-12 * e2.norm());
  }

  SUBCASE("skew-Hermitian argument gives a unitary result") {
    Eigen::MatrixXcd h(2, 2);
    const std::complex<double> i(0.0, 1.0);
    h << 0.4 * i, 0.3 + 0.2 * i, -0.3 + 0.2 * i, -0.4 * i;
    const Eigen::MatrixXcd u = expm(h);
    CHECK(max_abs(u.adjoint() * u - Eigen::MatrixXcd::Identity(2, 2)) <
          1e-14);
  }

  SUBCASE("non-square input throws") {
    Eigen::MatrixXd a(2, 3);
    a.setZero();
    CHECK_THROWS_AS((void)expm(a), std::invalid_argument);
  }
}

TEST_CASE("preset bases validate and strangers are rejected") {
  std::vector<Expr> three{num(1), num(0), num(0)};

  SUBCASE("all three presets pass their own validation") {
    CHECK_NOTHROW(group_equation_preset("sl2r.a1a2a3", three).validate());
    CHECK_NOTHROW(group_equation_preset("su2.v1v2v3", three).validate());
    std::vector<Expr> eight(8, num(0));
    eight[0] = num(1);
    CHECK_NOTHROW(group_equation_preset("sl3r.painleve", eight).validate());
  }

  SUBCASE("unknown preset name") {
    CHECK_THROWS_AS(group_equation_preset("so3.whatever", three),
                    std::invalid_argument);
  }

  SUBCASE("coefficient count must match") {
    CHECK_THROWS_AS(group_equation_preset("sl3r.painleve", three),
                    std::invalid_argument);
  }

  SUBCASE("a corrupted commutation table is caught") {
    auto eq = group_equation_preset("sl2r.a1a2a3", three);
    eq.table.at(0, 1, 0) = liekit::Rat(2);
    eq.table.at(1, 0, 0) = liekit::Rat(-2);
    CHECK_THROWS_AS(eq.validate(), std::invalid_argument);
  }

  SUBCASE("tag constraints are enforced") {
    auto eq = group_equation_preset("sl2r.a1a2a3", three);
    eq.tag = GroupTag::SU2;  // the real sl(2) basis is not skew-Hermitian
    CHECK_THROWS_AS(eq.validate(), std::invalid_argument);

    auto eq2 = group_equation_preset("sl2r.a1a2a3", three);
    eq2.basis[0](0, 0) = 0.5;  // no longer traceless
    CHECK_THROWS_AS(eq2.validate(), std::invalid_argument);
  }
}

TEST_CASE("group equation solves against closed forms") {
  SUBCASE("zero coefficients freeze the identity") {
    std::vector<Expr> b{num(0), num(0), num(0)};
    const auto tr = solve_group_equation(group_equation_preset("sl2r.a1a2a3", b), 1.0);
    CHECK(tr.size() >= 9);
    for (std::size_t k = 0; k < tr.size(); ++k) {
      CHECK(max_abs(tr.mats[k] - Eigen::MatrixXcd::Identity(2, 2)) < 1e-12);
      CHECK(tr.residuals[k] < 1e-12);
    }
  }

  SUBCASE("constant coefficients reduce to one exponential, sl(2, R)") {
    const double c1 = 0.8, c2 = -0.4, c3 = 0.6;
    std::vector<Expr> b{num(c1), num(c2), num(c3)};
    const auto tr = solve_group_equation(group_equation_preset("sl2r.a1a2a3", b), 1.0);
    Eigen::MatrixXd m(2, 2);
    m << -0.5 * c2, -c1, c3, 0.5 * c2;
    const Eigen::MatrixXd want = expm((-m).eval());
    CHECK(max_abs(tr.final_matrix() - want.cast<std::complex<double>>()) <
          1e-9);
    CHECK(std::abs(tr.final_matrix().determinant() - 1.0) < 1e-13);
  }

  SUBCASE("constant coefficients reduce to one exponential, su(2)") {
    const double c1 = 1.0, c2 = 0.5, c3 = 0.3;
    std::vector<Expr> b{num(c1), num(c2), num(c3)};
    const auto eq = group_equation_preset("su2.v1v2v3", b);
    const auto tr = solve_group_equation(eq, 1.0);
    Eigen::MatrixXcd m = c1 * eq.basis[0] + c2 * eq.basis[1] + c3 * eq.basis[2];
    const Eigen::MatrixXcd want = expm((-m).eval());
    CHECK(max_abs(tr.final_matrix() - want) < 1e-9);
    CHECK(max_abs(tr.final_matrix().adjoint() * tr.final_matrix() -
                  Eigen::MatrixXcd::Identity(2, 2)) < 1e-13);
  }

  SUBCASE("constant coefficients reduce to one exponential, sl(3, R)") {
    std::vector<Expr> b(8, num(0));
    b[7] = num(1);
    const auto eq = group_equation_preset("sl3r.painleve", b);
    const auto tr = solve_group_equation(eq, 1.0);
    Eigen::MatrixXcd want = expm((-eq.basis[7]).eval());
    CHECK(max_abs(tr.final_matrix() - want) < 1e-9);
    CHECK(std::abs(tr.final_matrix().determinant() - 1.0) < 1e-12);
  }

  SUBCASE("time-dependent su(2) stays unitary with small defects") {
    std::vector<Expr> b{cos(tvar()), sin(tvar()), num(0.5)};
    const auto tr = solve_group_equation(group_equation_preset("su2.v1v2v3", b), 3.0);
    for (std::size_t k = 0; k < tr.size(); ++k) {
      CHECK(tr.residuals[k] < 1e-7);
      CHECK(max_abs(tr.mats[k].adjoint() * tr.mats[k] -
                    Eigen::MatrixXcd::Identity(2, 2)) < 1e-12);
    }
  }

  SUBCASE("plain matrix tag integrates without projection") {
    LieGroupEquation eq;
    eq.tag = GroupTag::GLMatrix;
    Eigen::MatrixXcd m(2, 2);
    m << 1, 0, 0, 0;
    eq.basis = {m};
    eq.coeffs = {num(-1)};  // dA/dt = diag(1, 0) A
    eq.table = StructureTable::zeros(1);
    const auto tr = solve_group_equation(eq, 1.0);
    CHECK(tr.final_matrix()(0, 0).real() ==
          doctest::Approx(std::exp(1.0)).epsilon(1e-9));
    CHECK(tr.final_matrix()(1, 1).real() == doctest::Approx(1.0));
    for (double r : tr.residuals) CHECK(r == 0.0);
  }

  SUBCASE("zero horizon returns just the identity node") {
    std::vector<Expr> b{num(1), num(0), num(0)};
    const auto tr = solve_group_equation(group_equation_preset("sl2r.a1a2a3", b), 0.0);
    CHECK(tr.size() == 1);
    CHECK(max_abs(tr.mats[0] - Eigen::MatrixXcd::Identity(2, 2)) == 0.0);
  }
}

TEST_CASE("the group curve transports scalar solutions through poles") {
  // dx/dt = 1 + x^2 from x(0) = 0 is tan(t), with a pole at pi/2 that the
  // group-level solution passes straight through.
  std::vector<Expr> b{num(1), num(0), num(1)};
  IntegrateOptions opt;
  opt.tol = 1e-10;
  const auto tr =
      solve_group_equation(group_equation_preset("sl2r.a1a2a3", b), 2.0, opt);
  REQUIRE(tr.times.back() == doctest::Approx(2.0));
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double want = std::tan(tr.times[k]);
    if (std::fabs(want) > 10.0) continue;  // skip the pole's neighborhood
    const double got = act(real_part2(tr.mats[k]), 0.0);
    CHECK(mobius_gap(got, want) < 1e-7);
  }
  // Far side of the pole.
  CHECK(act(real_part2(tr.final_matrix()), 0.0) ==
        doctest::Approx(std::tan(2.0)).epsilon(1e-7));
}

TEST_CASE("Moebius action behaves projectively") {
  SUBCASE("identity fixes everything") {
    const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
    CHECK(act(id, 1.25) == 1.25);
    CHECK(std::isinf(act(id, std::numeric_limits<double>::infinity())));
  }

  SUBCASE("infinity maps to the column ratio and poles map to infinity") {
    Eigen::Matrix2d a;
    a << 2, 1, 1, 1;  // det 1
    CHECK(act(a, std::numeric_limits<double>::infinity()) ==
          doctest::Approx(2.0));
    CHECK(std::isinf(act(a, -1.0)));  // denominator x + 1 vanishes
  }

  SUBCASE("composition law, including trips through infinity") {
    Rng rng(977421u);
    const double inf = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 25; ++rep) {
      const Eigen::Matrix2d a1 = random_sl2(rng);
      const Eigen::Matrix2d a2 = random_sl2(rng);
      const Eigen::Matrix2d prod = a2 * a1;
      for (double x : {0.0, 1.0, -2.3, 17.0, inf}) {
        CHECK(mobius_gap(act(prod, x), act(a2, act(a1, x))) < 1e-9);
      }
    }
  }

  SUBCASE("linear and spinor actions are plain products") {
    Eigen::Matrix2d a;
    a << 1, 2, 0, 1;
    const Eigen::Vector2d xv = act(a, Eigen::Vector2d(3.0, -1.0));
    CHECK(xv(0) == doctest::Approx(1.0));
    CHECK(xv(1) == doctest::Approx(-1.0));

    Eigen::Matrix2cd u;
    const std::complex<double> i(0.0, 1.0);
    u << 0, i, i, 0;
    const Eigen::Vector2cd psi = act(u, Eigen::Vector2cd(1.0, 0.0));
    CHECK(std::abs(psi(0)) < 1e-15);
    CHECK(std::abs(psi(1) - i) < 1e-15);
  }

  SUBCASE("su(2) real coordinates and their unit norm") {
    std::vector<Expr> b{num(1), num(0.5), num(0.3)};
    const auto tr = solve_group_equation(group_equation_preset("su2.v1v2v3", b), 1.0);
    const Eigen::Vector4d c = su2_real_coordinates(tr.final_matrix());
    CHECK(c.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c(0) == doctest::Approx(tr.final_matrix()(0, 0).real()));
    CHECK(c(2) == doctest::Approx(tr.final_matrix()(0, 0).imag()));
  }
}

TEST_CASE("Wei-Norman exponents for sl(2)") {
  SUBCASE("zero coefficients give zero exponents") {
    const auto res = wei_norman_sl2(num(0), num(0), num(0), 1.0);
    CHECK_FALSE(res.pole);
    for (double v : res.v.final_state()) CHECK(v == 0.0);
  }

  SUBCASE("constant coefficients against the group solve") {
    IntegrateOptions opt;
    opt.tol = 1e-11;
    const auto res = wei_norman_sl2(num(0.7), num(-0.3), num(0.4), 1.0, opt);
    REQUIRE_FALSE(res.pole);
    const auto vf = res.v.final_state();
    const Eigen::Matrix2d got = wei_norman_sl2_matrix(vf[0], vf[1], vf[2]);

    std::vector<Expr> b{num(0.7), num(-0.3), num(0.4)};
    const auto tr = solve_group_equation(group_equation_preset("sl2r.a1a2a3", b), 1.0, opt);
    CHECK(max_abs(tr.final_matrix() - got.cast<std::complex<double>>()) <
          1e-8);
  }

  SUBCASE("twenty random smooth coefficient triples") {
    Rng rng(555301u);
    IntegrateOptions opt;
    opt.tol = 1e-11;
    for (int rep = 0; rep < 20; ++rep) {
      const Expr b1 = random_coeff(rng);
      const Expr b2 = random_coeff(rng);
      const Expr b3 = random_coeff(rng);
      const auto res = wei_norman_sl2(b1, b2, b3, 0.8, opt);
      REQUIRE_FALSE(res.pole);
      const auto vf = res.v.final_state();
      const Eigen::Matrix2d got = wei_norman_sl2_matrix(vf[0], vf[1], vf[2]);
      const auto tr = solve_group_equation(
          group_equation_preset("sl2r.a1a2a3", {b1, b2, b3}), 0.8, opt);
      CHECK(max_abs(tr.final_matrix() - got.cast<std::complex<double>>()) <
            1e-7);
    }
  }

  SUBCASE("the leading exponent's pole is reported, not thrown") {
    // v1' = 1 + v1^2 makes v1 = tan(t): the chart dies at pi/2.
    const auto res = wei_norman_sl2(num(1), num(0), num(1), 2.0);
    CHECK(res.pole);
    CHECK(res.pole_time > 1.55);
    CHECK(res.pole_time < kPi / 2 + 1e-6);
    CHECK(res.v.end_time() == res.pole_time);
  }
}

TEST_CASE("Wei-Norman exponents for the quadratic algebra") {
  SUBCASE("pure sl(2) coefficients leave the tail exponents at zero") {
    std::array<Expr, 6> b{num(0.5), num(0.2), num(-0.3),
                          num(0),   num(0),   num(0)};
    IntegrateOptions opt;
    opt.tol = 1e-11;
    const auto res = wei_norman_quadratic(b, 1.0, opt);
    REQUIRE_FALSE(res.pole);
    const auto vf = res.v.final_state();
    const auto res3 = wei_norman_sl2(b[0], b[1], b[2], 1.0, opt);
    const auto vf3 = res3.v.final_state();
    for (int k = 0; k < 3; ++k) {
      CHECK(vf[static_cast<std::size_t>(k)] ==
            doctest::Approx(vf3[static_cast<std::size_t>(k)]).epsilon(1e-10));
    }
    CHECK(vf[3] == 0.0);
    CHECK(vf[4] == 0.0);
    CHECK(vf[5] == 0.0);
  }

  SUBCASE("free particle with a drive matches the hand-integrated forms") {
    // Mass 1 and force S(t) = e0 + e cos(w t): every exponent integrates in
    // closed form, derived by hand and cross-checked against quadrature.
    const double e0 = 0.3, e = 0.7, w = 2.0;
    const Expr s = num(e0) + num(e) * cos(num(w) * tvar());
    std::array<Expr, 6> b{num(1), num(0), num(0), num(0), s, num(0)};
    IntegrateOptions opt;
    opt.tol = 1e-12;
    for (double t1 : {0.4, 1.0, 2.5}) {
      const auto res = wei_norman_quadratic(b, t1, opt);
      REQUIRE_FALSE(res.pole);
      const auto vf = res.v.final_state();
      const double c = std::cos(w * t1), sn = std::sin(w * t1);
      const double v4 = (2 * e + e0 * w * w * t1 * t1 - 2 * e * c) / (2 * w * w);
      const double v5 = (e0 * w * t1 + e * sn) / w;
      const double v6 = -(4 * e0 * e0 * w * w * w * t1 * t1 * t1 -
                          3 * e * (e - 4 * e0) * w * t1 +
                          3 * e * (4 * e + 2 * e0 * (w * w * t1 * t1 - 2) -
                                   3 * e * c) *
                              sn) /
                        (12 * w * w * w);
      CHECK(vf[0] == doctest::Approx(t1).epsilon(1e-10));
      CHECK(std::fabs(vf[1]) < 1e-10);
      CHECK(std::fabs(vf[2]) < 1e-10);
      CHECK(vf[3] == doctest::Approx(v4).epsilon(1e-9));
      CHECK(vf[4] == doctest::Approx(v5).epsilon(1e-9));
      CHECK(vf[5] == doctest::Approx(v6).epsilon(1e-9));
    }
  }

  SUBCASE("full six-coefficient system satisfies its own equations") {
    std::array<Expr, 6> b{num(1),
                          num(0.2) * sin(tvar()),
                          num(0.5) + num(0.1) * cos(tvar()),
                          num(0.3),
                          num(0.2) * cos(tvar()),
                          num(0.1)};
    IntegrateOptions opt;
    opt.tol = 1e-11;
    // The finite differences below probe the dense interpolant's slope, whose
    // error scales with the cube of the mesh step; keep the mesh fine.
    opt.max_h = 0.005;
    const auto res = wei_norman_quadratic(b, 1.0, opt);
    REQUIRE_FALSE(res.pole);
    Env env{{"t", 0.0}};
    const double h = 1e-5;
    for (int i = 1; i <= 9; ++i) {
      const double t = i / 10.0;
      std::array<double, 6> lo, hi, mid;
      res.v.sample(t - h, lo);
      res.v.sample(t + h, hi);
      res.v.sample(t, mid);
      env.set("t", t);
      double c[6];
      for (int k = 0; k < 6; ++k) c[k] = b[static_cast<std::size_t>(k)].eval(env);
      const std::array<double, 6> want{
          c[0] + c[1] * mid[0] + c[2] * mid[0] * mid[0],
          c[1] + 2 * c[2] * mid[0],
          std::exp(mid[1]) * c[2],
          c[3] + 0.5 * c[1] * mid[3] + c[0] * mid[4],
          c[4] - c[2] * mid[3] - 0.5 * c[1] * mid[4],
          c[5] - c[4] * mid[3] + 0.5 * c[2] * mid[3] * mid[3] -
              0.5 * c[0] * mid[4] * mid[4]};
      for (int k = 0; k < 6; ++k) {
        const double fd = (hi[static_cast<std::size_t>(k)] -
                           lo[static_cast<std::size_t>(k)]) /
                          (2 * h);
        CHECK(std::fabs(fd - want[static_cast<std::size_t>(k)]) < 1e-7);
      }
    }
  }
}

TEST_CASE("quadrature cascade for a driven particle") {
  const double e0 = 0.3, e = 0.7, w = 2.0;
  const Expr s = num(e0) + num(e) * cos(num(w) * tvar());

  SUBCASE("no force leaves only the mass integral") {
    const auto v = heisenberg_quadratures(num(2), num(0), 1.5);
    CHECK(v[0] == doctest::Approx(0.75).epsilon(1e-11));
    CHECK(v[1] == 0.0);
    CHECK(v[2] == 0.0);
    CHECK(v[3] == 0.0);
  }

  SUBCASE("constant mass matches the closed forms") {
    for (double t1 : {0.5, 1.3, 2.0}) {
      const auto v = heisenberg_quadratures(num(1), s, t1);
      const double c = std::cos(w * t1), sn = std::sin(w * t1);
      CHECK(v[0] == doctest::Approx(t1).epsilon(1e-11));
      CHECK(v[1] == doctest::Approx((2 * e + e0 * w * w * t1 * t1 -
                                     2 * e * c) /
                                    (2 * w * w))
                        .epsilon(1e-9));
      CHECK(v[2] ==
            doctest::Approx((e0 * w * t1 + e * sn) / w).epsilon(1e-9));
      const double v4 = -(4 * e0 * e0 * w * w * w * t1 * t1 * t1 -
                          3 * e * (e - 4 * e0) * w * t1 +
                          3 * e * (4 * e + 2 * e0 * (w * w * t1 * t1 - 2) -
                                   3 * e * c) *
                              sn) /
                        (12 * w * w * w);
      CHECK(v[3] == doctest::Approx(v4).epsilon(1e-9));
    }
  }

  SUBCASE("varying mass agrees with direct quadrature") {
    const Expr m = num(1) + num(0.5) * sin(tvar());
    const double t1 = 1.2;
    const auto v = heisenberg_quadratures(m, s, t1);
    const auto msd = [&](double u) { return 1.0 / (1.0 + 0.5 * std::sin(u)); };
    const auto sfn = [&](double u) { return e0 + e * std::cos(w * u); };
    const double v1 = integrate_simpson(msd, 0.0, t1, 1e-13);
    CHECK(v[0] == doctest::Approx(v1).epsilon(1e-10));
    const auto ints = [&](double u) {
      return e0 * u + (e / w) * std::sin(w * u);
    };
    const double v2 = integrate_simpson(
        [&](double u) { return msd(u) * ints(u); }, 0.0, t1, 1e-13);
    CHECK(v[1] == doctest::Approx(v2).epsilon(1e-10));
    CHECK(v[2] == doctest::Approx(ints(t1)).epsilon(1e-10));
    const auto innerv2 = [&](double u) {
      return integrate_simpson([&](double x) { return msd(x) * ints(x); },
                               0.0, u, 1e-12);
    };
    const double v4 =
        -integrate_simpson([&](double u) { return sfn(u) * innerv2(u); }, 0.0,
                           t1, 1e-10) -
        integrate_simpson(
            [&](double u) { return 0.5 * msd(u) * ints(u) * ints(u); }, 0.0,
            t1, 1e-12);
    CHECK(v[3] == doctest::Approx(v4).epsilon(1e-8));
  }
}

TEST_CASE("damped oscillator closed forms") {
  // b1 = e^{rt}/m0 and b3 = m0 e^{-rt} w0^2 with b2 = 0; the closed forms
  // are checked against the numerically integrated exponents.
  auto numeric = [](double m0, double r, double w0, double t1) {
    IntegrateOptions opt;
    opt.tol = 1e-12;
    const Expr b1 = exp(num(r) * tvar()) / num(m0);
    const Expr b3 = num(m0) * exp(num(-r) * tvar()) * num(w0 * w0);
    const auto res = wei_norman_sl2(b1, num(0), b3, t1, opt);
    REQUIRE_FALSE(res.pole);
    return res.v.final_state();
  };

  SUBCASE("overdamped branch") {
    const auto closed = caldirola_kanai_closed(1.0, 3.0, 1.0, 0.5);
    const auto direct = numeric(1.0, 3.0, 1.0, 0.5);
    for (int k = 0; k < 3; ++k) {
      CHECK(closed[static_cast<std::size_t>(k)] ==
            doctest::Approx(direct[static_cast<std::size_t>(k)])
                .epsilon(1e-8));
    }
  }

  SUBCASE("oscillatory branch lands back on the real axis") {
    const auto closed = caldirola_kanai_closed(2.0, 1.0, 1.0, 1.0);
    const auto direct = numeric(2.0, 1.0, 1.0, 1.0);
    for (int k = 0; k < 3; ++k) {
      CHECK(closed[static_cast<std::size_t>(k)] ==
            doctest::Approx(direct[static_cast<std::size_t>(k)])
                .epsilon(1e-8));
    }
  }

  SUBCASE("critically damped limit") {
    const auto closed = caldirola_kanai_closed(1.0, 2.0, 1.0, 0.7);
    const auto direct = numeric(1.0, 2.0, 1.0, 0.7);
    for (int k = 0; k < 3; ++k) {
      CHECK(closed[static_cast<std::size_t>(k)] ==
            doctest::Approx(direct[static_cast<std::size_t>(k)])
                .epsilon(1e-8));
    }
  }

  SUBCASE("time zero is the origin of the chart") {
    const auto v = caldirola_kanai_closed(1.0, 3.0, 1.0, 0.0);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == 0.0);
    CHECK(v[2] == 0.0);
  }

  SUBCASE("the oscillatory chart has a pole") {
    // For r = 1, w0 = 1 the denominator first vanishes near t = 2.418.
    CHECK_THROWS_AS((void)caldirola_kanai_closed(1.0, 1.0, 1.0, 2.5),
                    std::domain_error);
    CHECK_NOTHROW((void)caldirola_kanai_closed(1.0, 1.0, 1.0, 2.3));
  }

  SUBCASE("argument validation") {
    CHECK_THROWS_AS((void)caldirola_kanai_closed(-1.0, 3.0, 1.0, 0.5),
                    std::invalid_argument);
  }
}

TEST_CASE("inverse-square-time oscillator closed forms") {
  auto numeric = [](double m, double w0, double k, double t1) {
    IntegrateOptions opt;
    opt.tol = 1e-12;
    const Expr tk = tvar() + num(k);
    const Expr b1 = num(1.0 / m);
    const Expr b3 = num(m * w0 * w0) / (tk * tk);
    const auto res = wei_norman_sl2(b1, num(0), b3, t1, opt);
    REQUIRE_FALSE(res.pole);
    return res.v.final_state();
  };

  SUBCASE("real discriminant root") {
    const auto closed = tplusk_closed(1.0, 0.4, 1.0, 1.0);
    const auto direct = numeric(1.0, 0.4, 1.0, 1.0);
    for (int k = 0; k < 3; ++k) {
      CHECK(closed[static_cast<std::size_t>(k)] ==
            doctest::Approx(direct[static_cast<std::size_t>(k)])
                .epsilon(1e-8));
    }
  }

  SUBCASE("imaginary discriminant root") {
    const auto closed = tplusk_closed(1.5, 0.8, 2.0, 1.0);
    const auto direct = numeric(1.5, 0.8, 2.0, 1.0);
    for (int k = 0; k < 3; ++k) {
      CHECK(closed[static_cast<std::size_t>(k)] ==
            doctest::Approx(direct[static_cast<std::size_t>(k)])
                .epsilon(1e-8));
    }
  }

  SUBCASE("degenerate root") {
    const auto closed = tplusk_closed(1.0, 0.5, 1.0, 1.0);
    const auto direct = numeric(1.0, 0.5, 1.0, 1.0);
    for (int k = 0; k < 3; ++k) {
      CHECK(closed[static_cast<std::size_t>(k)] ==
            doctest::Approx(direct[static_cast<std::size_t>(k)])
                .epsilon(1e-8));
    }
  }

  SUBCASE("domain guards") {
    CHECK_THROWS_AS((void)tplusk_closed(1.0, 0.4, -1.0, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)tplusk_closed(1.0, 0.4, 1.0, -1.5),
                    std::invalid_argument);
    const auto v = tplusk_closed(1.0, 0.4, 1.0, 0.0);
    CHECK(v[0] == 0.0);
  }
}

TEST_CASE("coefficient transformation law") {
  const std::array<Expr, 3> b{num(0.4) + num(0.3) * sin(tvar()), num(-0.2),
                              num(1) + num(0.5) * cos(tvar())};

  SUBCASE("the identity curve changes nothing") {
    const std::array<Expr, 4> id{num(1), num(0), num(0), num(1)};
    const auto bp = transform_coefficients(id, b);
    Env env{{"t", 0.0}};
    for (int i = 0; i <= 8; ++i) {
      env.set("t", i / 8.0);
      for (int k = 0; k < 3; ++k) {
        CHECK(bp[static_cast<std::size_t>(k)].eval(env) ==
              doctest::Approx(b[static_cast<std::size_t>(k)].eval(env))
                  .epsilon(1e-12));
      }
    }
  }

  SUBCASE("a diagonal curve rescales the outer coefficients") {
    // With (f, 0, 0, 1/f): b1 -> f^2 b1, b2 -> b2 + 2 f'/f, b3 -> b3 / f^2.
    const Expr f = num(1) + num(0.25) * tvar() * tvar();
    const std::array<Expr, 4> curve{f, num(0), num(0), num(1) / f};
    const auto bp = transform_coefficients(curve, b);
    Env env{{"t", 0.0}};
    for (int i = 0; i <= 8; ++i) {
      const double t = i / 8.0;
      env.set("t", t);
      const double fv = 1 + 0.25 * t * t, df = 0.5 * t;
      CHECK(bp[0].eval(env) ==
            doctest::Approx(fv * fv * b[0].eval(env)).epsilon(1e-12));
      CHECK(bp[1].eval(env) ==
            doctest::Approx(b[1].eval(env) + 2 * df / fv).epsilon(1e-12));
      CHECK(bp[2].eval(env) ==
            doctest::Approx(b[2].eval(env) / (fv * fv)).epsilon(1e-12));
    }
  }

  SUBCASE("transforming the coefficients transforms the solution curve") {
    // If A solves the equation for b, then abar * A solves it for the
    // transformed coefficients.
    const Expr th = num(0.5) * tvar() * tvar();
    const std::array<Expr, 4> curve{cos(th), num(0) - sin(th), sin(th),
                                    cos(th)};
    const auto bp = transform_coefficients(curve, b);
    IntegrateOptions opt;
    opt.tol = 1e-11;
    const auto trb = solve_group_equation(
        group_equation_preset("sl2r.a1a2a3", {b[0], b[1], b[2]}), 1.0, opt);
    const auto trp = solve_group_equation(
        group_equation_preset("sl2r.a1a2a3", {bp[0], bp[1], bp[2]}), 1.0, opt);
    Env env{{"t", 0.0}};
    REQUIRE(trb.size() == trp.size());
    for (std::size_t k = 0; k < trb.size(); ++k) {
      env.set("t", trb.times[k]);
      Eigen::MatrixXcd abar(2, 2);
      abar << curve[0].eval(env), curve[1].eval(env), curve[2].eval(env),
          curve[3].eval(env);
      CHECK(max_abs(abar * trb.mats[k] - trp.mats[k]) < 1e-6);
    }
  }

  SUBCASE("composing curves composes the transformation") {
    const Expr f = num(1) + num(0.1) * tvar();
    const std::array<Expr, 4> c1{f, num(0), num(0), num(1) / f};
    const Expr th = num(0.3) * tvar();
    const std::array<Expr, 4> c2{cos(th), num(0) - sin(th), sin(th), cos(th)};
    // Matrix product c2 * c1, assembled symbolically.
    const std::array<Expr, 4> c21{
        c2[0] * c1[0] + c2[1] * c1[2], c2[0] * c1[1] + c2[1] * c1[3],
        c2[2] * c1[0] + c2[3] * c1[2], c2[2] * c1[1] + c2[3] * c1[3]};
    const auto two_step = transform_coefficients(c2, transform_coefficients(c1, b));
    const auto one_step = transform_coefficients(c21, b);
    Env env{{"t", 0.0}};
    for (int i = 0; i <= 8; ++i) {
      env.set("t", i / 8.0);
      for (int k = 0; k < 3; ++k) {
        CHECK(two_step[static_cast<std::size_t>(k)].eval(env) ==
              doctest::Approx(one_step[static_cast<std::size_t>(k)].eval(env))
                  .epsilon(1e-9));
      }
    }
  }

  SUBCASE("curves off the unit-determinant surface are rejected") {
    const std::array<Expr, 4> bad{num(2), num(0), num(0), num(1)};
    CHECK_THROWS_AS((void)transform_coefficients(bad, b),
                    std::invalid_argument);
  }
}

TEST_CASE("oscillator reduction through one particular solution") {
  auto solve_oscillator = [](const Expr& omega_sq, double x0, double v0,
                             double t1) {
    Env env{{"t", 0.0}};
    OdeSystem sys;
    sys.dim = 2;
    sys.rhs = [&](double t, std::span<const double> x, std::span<double> dx) {
      env.set("t", t);
      dx[0] = x[1];
      dx[1] = -omega_sq.eval(env) * x[0];
    };
    IntegrateOptions opt;
    opt.tol = 1e-11;
    opt.max_h = 0.05;
    const double init[2] = {x0, v0};
    return integrate(sys, 0.0, init, t1, opt);
  };

  SUBCASE("a free particle reduces trivially") {
    const auto alpha = solve_oscillator(num(0), 1.0, 0.0, 1.0);
    const auto red = sl2_reduction_oscillator(num(0), alpha);
    CHECK(red.reduced_b1(0.5) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(red.ratio(0.5) == doctest::Approx(0.0));
    const Eigen::Matrix2d f = red.frame(0.5);
    CHECK((f - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(red.t0() == 0.0);
    CHECK(red.t1() == 1.0);
  }

  SUBCASE("near-vanishing particular solutions are refused") {
    // cos(t) sinks to cos(1.5) ~ 0.07 of its peak on [0, 1.5].
    const auto alpha = solve_oscillator(num(1), 1.0, 0.0, 1.5);
    CHECK_THROWS_AS((void)sl2_reduction_oscillator(num(1), alpha),
                    std::domain_error);
  }

  SUBCASE("sign changes are refused") {
    const auto alpha = solve_oscillator(num(1), 1.0, 0.0, 2.5);
    CHECK_THROWS_AS((void)sl2_reduction_oscillator(num(1), alpha),
                    std::domain_error);
  }

  SUBCASE("a mismatched frequency is refused") {
    const auto alpha = solve_oscillator(num(1), 1.0, 0.0, 1.0);
    CHECK_THROWS_AS((void)sl2_reduction_oscillator(num(2), alpha),
                    std::invalid_argument);
  }

  SUBCASE("reconstruction reproduces the full group solution") {
    const Expr omega_sq = num(1) + num(0.3) * sin(tvar());
    const auto alpha = solve_oscillator(omega_sq, 1.0, 0.1, 1.0);
    const auto red = sl2_reduction_oscillator(omega_sq, alpha);

    IntegrateOptions opt;
    opt.tol = 1e-11;
    const auto tr = solve_group_equation(
        group_equation_preset("sl2r.a1a2a3", {num(1), num(0), omega_sq}), 1.0,
        opt);

    const Eigen::Matrix2d f0inv = red.frame(0.0).inverse();
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const double t = tr.times[k];
      const double c = integrate_simpson(
          [&](double u) { return red.reduced_b1(u); }, 0.0, t, 1e-12);
      Eigen::Matrix2d shift;
      shift << 1.0, c, 0.0, 1.0;
      const Eigen::Matrix2d rebuilt = red.frame(t) * shift * f0inv;
      CHECK(max_abs(rebuilt.cast<std::complex<double>>() - tr.mats[k]) <
            1e-6);
    }
  }

  SUBCASE("trajectories that are not phase curves are rejected early") {
    OdeSystem sys;
    sys.dim = 1;
    sys.rhs = [](double, std::span<const double>, std::span<double> dx) {
      dx[0] = 1.0;
    };
    const double init[1] = {1.0};
    const auto bad = integrate(sys, 0.0, init, 1.0, {});
    CHECK_THROWS_AS((void)sl2_reduction_oscillator(num(1), bad),
                    std::invalid_argument);
  }
}
