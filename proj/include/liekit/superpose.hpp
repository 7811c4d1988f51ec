#ifndef LIEKIT_SUPERPOSE_HPP
#define LIEKIT_SUPERPOSE_HPP

// Superposition rules: closed forms that rebuild the general solution of a
// system from a few particular solutions plus constants, the inverse maps
// that recover those constants from a target solution, the conserved
// pairings behind the Pinney-type rules, and a Monte Carlo verifier that
// reconstructs held-out trajectories and reports the worst error.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liekit/expr.hpp"
#include "liekit/ode.hpp"
#include "liekit/rng.hpp"

namespace liekit {

// ---------------------------------------------------------------------------
// Pointwise closed forms
// ---------------------------------------------------------------------------

// x = [x1 (x3 - x2) - k x2 (x3 - x1)] / [(x3 - x2) - k (x3 - x1)].
// k = 0 returns x1 and k = 1 returns x3.  The map is projective: a vanishing
// denominator yields the point at infinity (+inf), and k = +-inf yields x2.
// Throws std::invalid_argument when two of x1, x2, x3 coincide.
double riccati_rule(double x1, double x2, double x3, double k);

// Inverse of riccati_rule in its constant: the cross ratio
// (x - x1)(x3 - x2) / [(x - x2)(x3 - x1)].  x = +-inf is accepted and x = x2
// maps to +inf.
double riccati_constant(double x, double x1, double x2, double x3);

// sum_j k[j] * sols[j] over n particular solutions of an n-dimensional
// homogeneous linear system.
std::vector<double> linear_rule(const std::vector<std::vector<double>>& sols,
                                const std::vector<double>& k);

// Constants with linear_rule(sols, k) = x.  Throws std::invalid_argument
// when the solution matrix is singular.
std::vector<double> linear_constants(const std::vector<double>& x,
                                     const std::vector<std::vector<double>>& sols);

// sols[0] + sum_{j>=1} k[j-1] * (sols[j] - sols[0]) over n+1 particular
// solutions of an affine system; sols[0] is the reference solution.
std::vector<double> affine_rule(const std::vector<std::vector<double>>& sols,
                                const std::vector<double>& k);

std::vector<double> affine_constants(const std::vector<double>& x,
                                     const std::vector<std::vector<double>>& sols);

// Conserved pairing of two solutions of  x'' = -w^2(t) x + k / x^3:
//   (x1 v2 - x2 v1)^2 + k [(x2/x1)^2 + (x1/x2)^2].
// For k = 0 this is the squared Wronskian.  For solutions of the same
// equation with k > 0 its value is >= 2k, with equality only for dependent
// pairs.  The same formula pairs a target (x, v) with a particular solution
// when called as pinney_I3(x1, x, v1, v, k).
double pinney_I3(double x1, double x2, double v1, double v2, double k);

// Two-solution rule for positive solutions:
//   x^2 = k1 x1^2 + k2 x2^2 + branch * 2 sqrt(lambda (I3 x1^2 x2^2 - k (x1^4 + x2^4)))
// with lambda = (k1 k2 I3 + k (k1^2 + k2^2 - 1)) / (I3^2 - 4 k^2) and I3 the
// pairing above.  branch is +1 or -1.  Throws std::domain_error when the
// pair is dependent (I3 <= 2k), the radicand is negative, or the resulting
// square is not positive.
double pinney_two_solution_rule(double x1, double x2, double v1, double v2,
                                double k1, double k2, double k, int branch);

struct PinneyConstants {
  double k1 = 0.0;
  double k2 = 0.0;
  int branch = 1;
};

// Constants reproducing the target (x, v) from the pair at this instant:
//   k1 = (I2 I3 - 2 I1 k) / (I3^2 - 4 k^2),  k2 with I1 and I2 swapped,
// where I1 pairs the target with x1 and I2 pairs it with x2; the branch is
// whichever sign matches the target.
PinneyConstants pinney_two_solution_constants(double x, double v, double x1, double x2,
                                              double v1, double v2, double k);

// Rule using two solutions of the plain oscillator y'' = -w^2(t) y instead:
//   x = sqrt(2) / |W| * sqrt(I2 y1^2 + I1 y2^2 + branch * sqrt(4 I1 I2 - k W^2) y1 y2)
// with W = y1 w2 - y2 w1 their Wronskian.  Throws std::invalid_argument on a
// vanishing Wronskian and std::domain_error on a negative radicand or square.
double pinney_classic_rule(double y1, double y2, double w1, double w2,
                           double I1, double I2, double k, int branch = 1);

struct PinneyClassicConstants {
  double I1 = 0.0;
  double I2 = 0.0;
  int branch = 1;
};

// Constants for the classic rule from the target (x, v) and the oscillator
// pair:  I1 = ((y1 v - x w1)^2 + k (y1/x)^2) / 2  and I2 likewise with the
// second oscillator solution.
PinneyClassicConstants pinney_classic_constants(double x, double v, double y1, double y2,
                                                double w1, double w2, double k);

// Conserved pairing of a target (x, v) of  x'' = -w^2(t) x + k / x^3  with
// two solutions xa, xb of the companion Riccati equation x' = 1 + w^2(t) x^2:
//   (k + a^2) xa xb / [(xb - xa) x^2] - a   with   a = (1/xa - v/x) x^2.
// Constant in t for any shared w^2(t).  Throws std::invalid_argument at
// companion zeros or coincidences and at x = 0.
double pinney_mixed_constant(double x, double v, double xa, double xb, double k);

// Rule rebuilding the target from three companion Riccati solutions and the
// two pairings c1 (of the target with x1, x2) and c2 (with x1, x3):
//   q   = (c1 - c2) x2 (x3 - x1) / (x3 - x2) - c1 x1
//   x^2 = (k x1^2 + q^2)(x3 - x2) / [(c1 - c2)(x2 - x1)(x3 - x1)].
// This grouping stays finite when a companion passes through zero.  Throws
// std::invalid_argument on coincident companions and std::domain_error on
// equal constants or a non-positive square.
double pinney_from_riccati(double x1, double x2, double x3, double c1, double c2,
                           double k);

// k (y/x)^2 + (y vx - x vy)^2, conserved along the joint flow of
// x'' = -w^2(t) x + k / x^3 and y'' = -w^2(t) y with shared frequency.
double ermakov_lewis(double x, double y, double vx, double vy, double k);

// First integral of the coupled pair
//   x'' = -w^2(t) x + f(y/x) / x^3,   y'' = -w^2(t) y + g(y/x) / y^3,
// namely xi^2 / 2 plus the quadrature of -f(1/z)/z^3 + z g(1/z) in z from 1
// to u = x/y, where xi = x vy - y vx and f, g are expressions in the single
// variable u.  The anchor at u = 1 fixes the additive constant, so only
// differences between two states carry meaning.  state is (x, y, vx, vy)
// with x and y of the same sign; otherwise throws std::domain_error.
double generalized_ermakov(const Expr& f, const Expr& g,
                           const std::array<double, 4>& state);

// ---------------------------------------------------------------------------
// Rule objects
// ---------------------------------------------------------------------------

// A recombination of m particular solutions into the general solution,
// bundled with the inverse map recovering the constants and a predicate
// guarding its domain.  Rules are immutable once built and safe to share
// across threads.
struct SuperpositionRule {
  using Sols = std::vector<std::vector<double>>;

  std::string name;
  int m = 0;            // particular solutions consumed
  int source_dim = 0;   // state dimension of each particular solution
  int target_dim = 0;   // state dimension of the reconstructed system
  int out_dim = 0;      // leading target components the rule rebuilds
  int n_constants = 0;
  bool time_dependent = false;  // whether the maps read the time argument

  // forward(t, sols, constants): the first out_dim components of the target.
  std::function<std::vector<double>(double, const Sols&, const std::vector<double>&)> forward;
  // extract(t, target, sols): constants matching the target at this instant.
  std::function<std::vector<double>(double, const std::vector<double>&, const Sols&)> extract;
  // True when forward is defined on a neighbourhood of this configuration.
  std::function<bool(const Sols&, const std::vector<double>&)> admissible;
  // Optional signed margin that passes through zero exactly where the rule's
  // branch sign must flip; the verifier aborts a trial whose margin changes
  // sign or whose magnitude collapses inside the horizon.
  std::function<double(double, const Sols&, const std::vector<double>&)> health;
  // Set when the particular solutions solve a different system than the
  // target (the classic and mixed Pinney rules).
  std::optional<TdVectorField> source;
};

SuperpositionRule make_riccati_rule();
SuperpositionRule make_linear_rule(int n);
SuperpositionRule make_affine_rule(int n);
SuperpositionRule make_pinney_sr4_rule(double k);

// The classic and mixed rules take the target's frequency squared as an
// expression in t so the companion system (plain oscillator, companion
// Riccati equation) can be integrated by the verifier; without it the rule
// still evaluates but cannot be verified end to end.
SuperpositionRule make_pinney_classic_rule(double k, std::optional<Expr> omega_sq = {});
SuperpositionRule make_pinney_mixed_rule(double k, std::optional<Expr> omega_sq = {});

// Velocity-free rules for two second-order families:
//   "linear"      x'' = a(t) x          x = k1 x1 + k2 x2
//   "reciprocal"  y y'' - 2 y'^2 = -a(t) y^2   y = (k1 / y1 + k2 / y2)^(-1)
// Both consume two particular solutions as (position, velocity) states and
// rebuild the position only.  Throws std::invalid_argument on other kinds.
SuperpositionRule sode_velocity_free_examples(const std::string& kind);

// Registry addressed by the stable names used across the command line tool:
//   riccati | linear | affine | pinney.sr4 | pinney.classic | pinney.mixed |
//   sode.linear | sode.reciprocal
// n feeds the linear family, k the Pinney family.  Throws
// std::invalid_argument for unknown names.
SuperpositionRule make_rule(const std::string& name, int n = 1, double k = 1.0);

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

struct VerificationReport {
  std::string rule_name;
  std::string system;      // one-line description of the target system
  int trials = 0;          // requested
  int completed = 0;       // trials that produced an error figure
  int skipped = 0;         // singular or inadmissible configurations
  double max_rel_error = 0.0;  // worst |recon - truth| / (1 + |truth|)
  double tol = 0.0;
  bool passed = false;     // completed > 0 and max_rel_error <= tol
  std::string to_string() const;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  double t0 = 0.0;
  int samples = 129;            // reconstruction grid over the horizon
  double ode_tol = 1e-11;       // ground-truth integration tolerance
  int attempts_per_trial = 60;  // redraws before a trial counts as skipped
  bool parallel = true;         // trials run via parallel_for; results are
                                // identical either way (per-trial rng forks)
  // Initial-condition samplers; the default fills iid uniform(-2, 2).
  // source_ic falls back to target_ic for the companion system.
  std::function<void(Rng&, std::span<double>)> target_ic;
  std::function<void(Rng&, std::span<double>)> source_ic;
};

// For each trial: draw admissible initial conditions, integrate the rule's m
// companion solutions plus one held-out target solution, extract the
// constants at t0, rebuild the target across the horizon and record the
// worst relative error.  Trials whose configuration turns singular (early
// integrator stop, inadmissible draw after the retry budget, branch margin
// collapse) are skipped and counted.  Throws std::runtime_error when every
// trial is skipped.
VerificationReport verify_rule(const SuperpositionRule& rule, const TdVectorField& system,
                               int trials, double horizon, double tol,
                               const VerifyOptions& opt = {});

}  // namespace liekit

#endif
