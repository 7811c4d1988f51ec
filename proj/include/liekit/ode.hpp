#ifndef LIEKIT_ODE_HPP
#define LIEKIT_ODE_HPP

// Explicit adaptive integrator: Dormand-Prince 5(4) with PI step control and
// cubic Hermite dense output.  This is the single numerical workhorse under
// every solver in the library, so its tolerances are taken seriously: the
// error estimate is scaled per component by tol*(1 + |x_i|).

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "liekit/expr.hpp"

namespace liekit {

struct OdeSystem {
  int dim = 0;
  // rhs(t, x, dx): write dx/dt into dx (both spans have length dim).
  std::function<void(double, std::span<const double>, std::span<double>)> rhs;
};

enum class StopReason {
  ReachedEnd,   // integrated to t1
  Singularity,  // a component left [-blowup, blowup] or stopped being finite,
                // or the step size underflowed (typically a finite-time pole)
  MaxSteps,
};

struct IntegrateOptions {
  double tol = 1e-8;            // accepted range [1e-13, 1e-3]
  double h0 = 0.0;              // initial step; 0 picks one automatically
  double max_h = 0.0;           // step cap; 0 = none
  std::size_t max_steps = 2000000;  // counts attempts, including rejections
  double blowup = 1e12;
};

// Result of one integration: the accepted mesh with states and derivatives,
// plus dense evaluation between mesh points.
class Trajectory {
 public:
  StopReason stop() const { return stop_; }
  double start_time() const { return ts_.front(); }
  double end_time() const { return ts_.back(); }  // last accepted time
  std::size_t steps() const { return ts_.size() - 1; }

  const std::vector<double>& times() const { return ts_; }
  const std::vector<double>& state(std::size_t k) const { return xs_[k]; }
  const std::vector<double>& final_state() const { return xs_.back(); }

  // State at time t.  Mesh points are returned exactly as stored (bitwise);
  // anything in between is cubic Hermite interpolation, O(h^4) accurate.
  // Throws std::out_of_range outside [start_time, end_time].
  std::vector<double> sample(double t) const;
  void sample(double t, std::span<double> out) const;

 private:
  friend Trajectory integrate(const OdeSystem&, double, std::span<const double>,
                              double, const IntegrateOptions&);
  std::vector<double> ts_;
  std::vector<std::vector<double>> xs_;
  std::vector<std::vector<double>> fs_;  // rhs at the mesh points
  StopReason stop_ = StopReason::ReachedEnd;
  bool forward_ = true;
};

// Integrates from (t0, x0) to t1 (either direction).  Throws
// std::invalid_argument for an empty system, dimension mismatch, or a
// tolerance outside the accepted range.
Trajectory integrate(const OdeSystem& sys, double t0, std::span<const double> x0,
                     double t1, const IntegrateOptions& opt = {});

// A nonautonomous first-order system x' = f(t, x).  Carries either one
// closed-form expression per component, written in the variables
// t, x1, ..., xn, or an opaque callable supplied by another module.
class TdVectorField {
 public:
  using RhsFn = std::function<void(double, std::span<const double>, std::span<double>)>;

  TdVectorField() = default;
  TdVectorField(int dim, RhsFn rhs);
  explicit TdVectorField(std::vector<Expr> components);

  int dim() const { return dim_; }
  bool symbolic() const { return !comp_.empty(); }
  // Empty when the field was built from a callable.
  const std::vector<Expr>& components() const { return comp_; }

  // Evaluation-ready form.  Every call returns a system with its own private
  // scratch environment, so systems obtained from separate calls may be
  // integrated concurrently.
  OdeSystem ode() const;

  // One-line human-readable summary, used in verification reports.
  std::string describe() const;

 private:
  int dim_ = 0;
  std::vector<Expr> comp_;
  RhsFn rhs_;
};

Trajectory integrate(const TdVectorField& f, double t0, std::span<const double> x0,
                     double t1, const IntegrateOptions& opt = {});

}  // namespace liekit

#endif
