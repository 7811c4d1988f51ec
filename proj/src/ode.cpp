#include "liekit/ode.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace liekit {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Difference between the 5th and embedded 4th order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

bool all_finite_within(std::span<const double> x, double bound) {
  for (double v : x) {
    if (!std::isfinite(v) || std::fabs(v) > bound) return false;
  }
  return true;
}

bool all_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

std::vector<double> Trajectory::sample(double t) const {
  std::vector<double> out(xs_.front().size());
  sample(t, out);
  return out;
}

void Trajectory::sample(double t, std::span<double> out) const {
  const std::size_t n = ts_.size();
  double lo = forward_ ? ts_.front() : ts_.back();
  double hi = forward_ ? ts_.back() : ts_.front();
  if (t < lo || t > hi) throw std::out_of_range("sample time outside trajectory");

  // Locate the first mesh index with ts_[k] "at or past" t in the direction
  // of integration, then check for an exact hit before interpolating.
  std::size_t k;
  if (forward_) {
    k = static_cast<std::size_t>(
        std::lower_bound(ts_.begin(), ts_.end(), t) - ts_.begin());
  } else {
    k = static_cast<std::size_t>(
        std::lower_bound(ts_.begin(), ts_.end(), t, std::greater<double>()) -
        ts_.begin());
  }
  if (k < n && ts_[k] == t) {
    std::copy(xs_[k].begin(), xs_[k].end(), out.begin());
    return;
  }
  // t lies strictly inside (ts_[k-1], ts_[k]).
  const std::size_t i = k - 1;
  const double h = ts_[i + 1] - ts_[i];
  const double th = (t - ts_[i]) / h;
  const double th2 = th * th, th3 = th2 * th;
  const double h00 = 2 * th3 - 3 * th2 + 1;
  const double h10 = th3 - 2 * th2 + th;
  const double h01 = -2 * th3 + 3 * th2;
  const double h11 = th3 - th2;
  const auto& x0 = xs_[i];
  const auto& x1 = xs_[i + 1];
  const auto& f0 = fs_[i];
  const auto& f1 = fs_[i + 1];
  for (std::size_t j = 0; j < x0.size(); ++j)
    out[j] = h00 * x0[j] + h10 * h * f0[j] + h01 * x1[j] + h11 * h * f1[j];
}

Trajectory integrate(const OdeSystem& sys, double t0, std::span<const double> x0,
                     double t1, const IntegrateOptions& opt) {
  if (sys.dim <= 0 || !sys.rhs) throw std::invalid_argument("empty ODE system");
  if (static_cast<int>(x0.size()) != sys.dim)
    throw std::invalid_argument("initial state has wrong dimension");
  if (!(opt.tol >= 1e-13 && opt.tol <= 1e-3))
    throw std::invalid_argument("tolerance outside [1e-13, 1e-3]");

  const int n = sys.dim;
  const double dir = (t1 >= t0) ? 1.0 : -1.0;

  Trajectory traj;
  traj.forward_ = dir > 0;

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  std::vector<double> xt(n), xnew(n);

  sys.rhs(t0, x, k1);
  traj.ts_.push_back(t0);
  traj.xs_.push_back(x);
  traj.fs_.push_back(k1);

  if (!all_finite_within(x, opt.blowup) || !all_finite(k1)) {
    traj.stop_ = StopReason::Singularity;
    return traj;
  }
  if (t1 == t0) return traj;

  // Initial step: a small fraction of the interval, shrunk further when the
  // initial slope is steep relative to the state.
  double h;
  if (opt.h0 != 0.0) {
    h = std::fabs(opt.h0);
  } else {
    h = 1e-3 * std::fabs(t1 - t0);
    double steep = 0.0;
    for (int i = 0; i < n; ++i)
      steep = std::max(steep, std::fabs(k1[i]) / (1.0 + std::fabs(x[i])));
    if (steep > 0.0) h = std::min(h, 0.05 / steep);
  }
  if (opt.max_h > 0.0) h = std::min(h, opt.max_h);

  double t = t0;
  double errold = 1e-4;
  std::size_t attempts = 0;

  while (dir * (t1 - t) > 0.0) {
    if (++attempts > opt.max_steps) {
      traj.stop_ = StopReason::MaxSteps;
      return traj;
    }
    bool last = false;
    if (h >= dir * (t1 - t)) {
      h = dir * (t1 - t);
      last = true;
    }
    if (!last && h < 1e-14 * std::max(1.0, std::fabs(t))) {
      traj.stop_ = StopReason::Singularity;  // step damped to nothing
      return traj;
    }
    const double hs = dir * h;  // signed step

    for (int i = 0; i < n; ++i) xt[i] = x[i] + hs * a21 * k1[i];
    sys.rhs(t + c2 * hs, xt, k2);
    for (int i = 0; i < n; ++i) xt[i] = x[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    sys.rhs(t + c3 * hs, xt, k3);
    for (int i = 0; i < n; ++i)
      xt[i] = x[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    sys.rhs(t + c4 * hs, xt, k4);
    for (int i = 0; i < n; ++i)
      xt[i] = x[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    sys.rhs(t + c5 * hs, xt, k5);
    for (int i = 0; i < n; ++i)
      xt[i] = x[i] +
              hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    sys.rhs(t + hs, xt, k6);
    for (int i = 0; i < n; ++i)
      xnew[i] = x[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                             b6 * k6[i]);
    sys.rhs(t + hs, xnew, k7);  // FSAL: becomes k1 of the next step

    // Only the state is held inside the blow-up bound; a large but finite
    // derivative just drives the error estimate up and shrinks the step.
    bool bad = !all_finite_within(xnew, opt.blowup) || !all_finite(k7);

    double err = 0.0;
    if (!bad) {
      for (int i = 0; i < n; ++i) {
        double est = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                           e6 * k6[i] + e7 * k7[i]);
        double sc = opt.tol * (1.0 + std::fabs(x[i]));
        err = std::max(err, std::fabs(est) / sc);
        if (!std::isfinite(est)) bad = true;
      }
    }

    if (bad) {
      // Retreat hard; if the state genuinely blows up here the step-underflow
      // guard above converts this into a Singularity stop at the last good t.
      h *= 0.2;
      continue;
    }

    if (err <= 1.0) {
      t = last ? t1 : t + hs;
      x.swap(xnew);
      k1.swap(k7);
      traj.ts_.push_back(t);
      traj.xs_.push_back(x);
      traj.fs_.push_back(k1);
      // PI controller (Hairer's beta = 0.08 variant with alpha adjusted).
      double e = std::max(err, 1e-10);
      double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(errold, 0.4 / 5.0);
      fac = std::clamp(fac, 0.2, 5.0);
      h *= fac;
      errold = std::max(err, 1e-4);
    } else {
      double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
      h *= fac;
    }
    if (opt.max_h > 0.0) h = std::min(h, opt.max_h);
  }

  traj.stop_ = StopReason::ReachedEnd;
  return traj;
}

TdVectorField::TdVectorField(int dim, RhsFn rhs) : dim_(dim), rhs_(std::move(rhs)) {
  if (dim_ <= 0) throw std::invalid_argument("TdVectorField: dim must be positive");
  if (!rhs_) throw std::invalid_argument("TdVectorField: empty callable");
}

TdVectorField::TdVectorField(std::vector<Expr> components) : comp_(std::move(components)) {
  if (comp_.empty()) throw std::invalid_argument("TdVectorField: no components");
  dim_ = static_cast<int>(comp_.size());
}

OdeSystem TdVectorField::ode() const {
  if (dim_ <= 0) throw std::logic_error("TdVectorField: default-constructed");
  if (!symbolic()) return OdeSystem{dim_, rhs_};
  auto env = std::make_shared<Env>();
  auto names = std::make_shared<std::vector<std::string>>();
  env->set("t", 0.0);
  for (int i = 0; i < dim_; ++i) {
    names->push_back("x" + std::to_string(i + 1));
    env->set(names->back(), 0.0);
  }
  auto comp = std::make_shared<const std::vector<Expr>>(comp_);
  return OdeSystem{
      dim_, [env, names, comp](double t, std::span<const double> x, std::span<double> dx) {
        env->set("t", t);
        for (std::size_t i = 0; i < x.size(); ++i) env->set((*names)[i], x[i]);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = (*comp)[i].eval(*env);
      }};
}

std::string TdVectorField::describe() const {
  if (dim_ <= 0) return "<empty>";
  if (!symbolic()) {
    std::ostringstream os;
    os << "<callable, dim " << dim_ << ">";
    return os.str();
  }
  std::ostringstream os;
  for (int i = 0; i < dim_; ++i) {
    if (i) os << "; ";
    os << "x" << (i + 1) << "' = " << comp_[static_cast<std::size_t>(i)].str();
  }
  return os.str();
}

Trajectory integrate(const TdVectorField& f, double t0, std::span<const double> x0,
                     double t1, const IntegrateOptions& opt) {
  return integrate(f.ode(), t0, x0, t1, opt);
}

}  // namespace liekit
