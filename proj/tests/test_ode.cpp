#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "liekit/ode.hpp"

using liekit::integrate;
using liekit::IntegrateOptions;
using liekit::OdeSystem;
using liekit::StopReason;
using liekit::Trajectory;

namespace {

OdeSystem exponential() {
  return {1, [](double, std::span<const double> x, std::span<double> dx) {
            dx[0] = x[0];
          }};
}

OdeSystem oscillator() {
  return {2, [](double, std::span<const double> x, std::span<double> dx) {
            dx[0] = x[1];
            dx[1] = -x[0];
          }};
}

}  // namespace

TEST_CASE("ode: exponential growth hits e") {
  IntegrateOptions opt;
  opt.tol = 1e-10;
  double x0[] = {1.0};
  auto traj = integrate(exponential(), 0.0, x0, 1.0, opt);
  REQUIRE(traj.stop() == StopReason::ReachedEnd);
  CHECK(std::fabs(traj.final_state()[0] - std::exp(1.0)) < 1e-8);
}

TEST_CASE("ode: quadratic growth hits tan") {
  OdeSystem sys{1, [](double, std::span<const double> x, std::span<double> dx) {
                  dx[0] = 1.0 + x[0] * x[0];
                }};
  IntegrateOptions opt;
  opt.tol = 1e-10;
  double x0[] = {0.0};
  auto traj = integrate(sys, 0.0, x0, 1.0, opt);
  REQUIRE(traj.stop() == StopReason::ReachedEnd);
  CHECK(std::fabs(traj.final_state()[0] - std::tan(1.0)) < 1e-8);
}

TEST_CASE("ode: error tracks the tolerance") {
  double x0[] = {1.0};
  for (double tol : {1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11}) {
    IntegrateOptions opt;
    opt.tol = tol;
    auto traj = integrate(exponential(), 0.0, x0, 2.0, opt);
    REQUIRE(traj.stop() == StopReason::ReachedEnd);
    double err = std::fabs(traj.final_state()[0] - std::exp(2.0));
    CHECK(err <= 100 * tol);
  }

  // Tightening the tolerance never makes the tangent solution much worse
  // (monotone within a factor-4 slack), and tracks it in magnitude.
  OdeSystem sys{1, [](double, std::span<const double> x, std::span<double> dx) {
                  dx[0] = 1.0 + x[0] * x[0];
                }};
  double z0[] = {0.0};
  double prev = -1.0;
  for (double tol : {1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11}) {
    IntegrateOptions opt;
    opt.tol = tol;
    auto traj = integrate(sys, 0.0, z0, 1.0, opt);
    REQUIRE(traj.stop() == StopReason::ReachedEnd);
    double err = std::fabs(traj.final_state()[0] - std::tan(1.0));
    CHECK(err <= 100 * tol);
    if (prev >= 0.0) CHECK(err <= 4.0 * prev);
    prev = err;
  }
}

TEST_CASE("ode: forward then backward returns to start") {
  IntegrateOptions opt;
  opt.tol = 1e-10;
  double x0[] = {0.3, -0.7};
  auto fwd = integrate(oscillator(), 0.0, x0, 5.0, opt);
  REQUIRE(fwd.stop() == StopReason::ReachedEnd);
  auto back = integrate(oscillator(), 5.0, fwd.final_state(), 0.0, opt);
  REQUIRE(back.stop() == StopReason::ReachedEnd);
  CHECK(std::fabs(back.final_state()[0] - 0.3) < 10 * opt.tol * 100);
  CHECK(std::fabs(back.final_state()[1] + 0.7) < 10 * opt.tol * 100);
  CHECK(back.end_time() == 0.0);
}

TEST_CASE("ode: oscillator energy drift stays small") {
  IntegrateOptions opt;
  opt.tol = 1e-10;
  double x0[] = {1.0, 0.0};
  auto traj = integrate(oscillator(), 0.0, x0, 20.0, opt);
  REQUIRE(traj.stop() == StopReason::ReachedEnd);
  auto energy = [](const std::vector<double>& s) {
    return 0.5 * (s[0] * s[0] + s[1] * s[1]);
  };
  double e0 = energy(traj.state(0));
  double worst = 0.0;
  for (std::size_t k = 0; k <= traj.steps(); ++k)
    worst = std::max(worst, std::fabs(energy(traj.state(k)) - e0));
  CHECK(worst < 100 * opt.tol);
}

TEST_CASE("ode: dense output converges at fourth order") {
  OdeSystem sys{1, [](double t, std::span<const double>, std::span<double> dx) {
                  dx[0] = std::cos(t);
                }};
  double x0[] = {0.0};
  auto worst_interp_err = [&](double cap) {
    IntegrateOptions opt;
    opt.tol = 1e-13;
    opt.max_h = cap;
    auto traj = integrate(sys, 0.0, x0, 3.0, opt);
    REQUIRE(traj.stop() == StopReason::ReachedEnd);
    double worst = 0.0;
    for (int i = 1; i < 300; ++i) {
      double t = 3.0 * i / 300.0 - 0.0049;  // deliberately off-mesh
      if (t <= 0 || t >= 3) continue;
      worst = std::max(worst, std::fabs(traj.sample(t)[0] - std::sin(t)));
    }
    return worst;
  };
  // Caps at or below the controller's natural step (~0.042 at this
  // tolerance), so the mesh spacing is what we dial in.  The fine cap stays
  // well above tolerance-level noise or the ratio gets polluted.
  double coarse = worst_interp_err(0.04);
  double fine = worst_interp_err(0.02);
  CHECK(coarse > 1e-9);          // interpolation error dominates the mesh error
  CHECK(coarse / fine >= 8.0);   // halving h should buy about 2^4
  CHECK(coarse / fine <= 40.0);
  // And the absolute size agrees with the h^4/384 Hermite bound.
  CHECK(coarse < 3 * std::pow(0.04, 4) / 384.0);
}

TEST_CASE("ode: finite-time blow-up reports a singularity") {
  OdeSystem sys{1, [](double, std::span<const double> x, std::span<double> dx) {
                  dx[0] = x[0] * x[0];
                }};
  IntegrateOptions opt;
  opt.tol = 1e-8;
  double x0[] = {1.0};
  auto traj = integrate(sys, 0.0, x0, 2.0, opt);  // pole at t = 1
  CHECK(traj.stop() == StopReason::Singularity);
  // The numerical pole sits within O(tol) of the analytic one.
  CHECK(traj.end_time() > 0.999);
  CHECK(traj.end_time() < 1.001);
  CHECK(traj.final_state()[0] > 1e10);
}

TEST_CASE("ode: mesh samples are returned bitwise") {
  IntegrateOptions opt;
  opt.tol = 1e-9;
  double x0[] = {1.0, 0.0};
  auto traj = integrate(oscillator(), 0.0, x0, 7.0, opt);
  REQUIRE(traj.steps() > 5);
  for (std::size_t k = 0; k <= traj.steps(); ++k) {
    auto s = traj.sample(traj.times()[k]);
    CHECK(s[0] == traj.state(k)[0]);
    CHECK(s[1] == traj.state(k)[1]);
  }
  CHECK_THROWS_AS(traj.sample(-0.1), std::out_of_range);
  CHECK_THROWS_AS(traj.sample(7.1), std::out_of_range);
}

TEST_CASE("ode: backward integration") {
  IntegrateOptions opt;
  opt.tol = 1e-11;
  double x0[] = {1.0};
  auto traj = integrate(exponential(), 1.0, x0, 0.0, opt);
  REQUIRE(traj.stop() == StopReason::ReachedEnd);
  CHECK(std::fabs(traj.final_state()[0] - std::exp(-1.0)) < 1e-9);
  // dense output on a reversed mesh
  CHECK(std::fabs(traj.sample(0.5)[0] - std::exp(-0.5)) < 1e-8);
}

TEST_CASE("ode: argument validation") {
  double x0[] = {1.0};
  IntegrateOptions opt;
  opt.tol = 1e-2;  // out of range
  CHECK_THROWS_AS(integrate(exponential(), 0, x0, 1, opt), std::invalid_argument);
  opt.tol = 1e-8;
  double bad[] = {1.0, 2.0};
  CHECK_THROWS_AS(integrate(exponential(), 0, bad, 1, opt), std::invalid_argument);
  OdeSystem empty;
  CHECK_THROWS_AS(integrate(empty, 0, x0, 1, opt), std::invalid_argument);

  opt.max_steps = 10;
  auto traj = integrate(oscillator(), 0.0, std::vector<double>{1.0, 0.0}, 1000.0, opt);
  CHECK(traj.stop() == StopReason::MaxSteps);
}
