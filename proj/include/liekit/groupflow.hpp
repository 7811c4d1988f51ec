#pragma once

// Matrix Lie-group equations dA/dt = -sum_a b_a(t) M_a A with A(0) = I,
// group actions that turn the solved curve A(t) into system solutions, and
// Wei-Norman factorizations with their closed-form special cases.

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "liekit/expr.hpp"
#include "liekit/lie.hpp"
#include "liekit/ode.hpp"

namespace liekit {

enum class GroupTag { SL2R, SU2, SL3R, GLMatrix };

// A right-invariant equation on a matrix group, given by basis matrices M_a
// (stored complex; real groups simply carry zero imaginary parts), scalar
// coefficient expressions b_a(t), and the commutation table the basis is
// supposed to satisfy.
struct LieGroupEquation {
  GroupTag tag = GroupTag::GLMatrix;
  std::vector<Eigen::MatrixXcd> basis;
  std::vector<Expr> coeffs;
  StructureTable table;

  // Throws std::invalid_argument when shapes disagree, when the basis fails
  // the declared commutation relations beyond 1e-12, or when a per-group
  // constraint (tracelessness, skew-Hermiticity for SU2) is violated.
  void validate() const;
};

// Preset bases addressable by name: "sl2r.a1a2a3", "su2.v1v2v3",
// "sl3r.painleve".  `coeffs` must match the basis size.
LieGroupEquation group_equation_preset(const std::string& name,
                                       std::vector<Expr> coeffs);

// The solved curve on a mesh.  States are stored after projection onto the
// group; `residuals` records the pre-projection defect (|det - 1| for the
// special linear groups, max-norm of A^dagger A - I for SU2) at each node.
struct GroupTrajectory {
  GroupTag tag = GroupTag::GLMatrix;
  std::vector<double> times;
  std::vector<Eigen::MatrixXcd> mats;
  std::vector<double> residuals;

  std::size_t size() const { return times.size(); }
  const Eigen::MatrixXcd& final_matrix() const { return mats.back(); }
};

// Integrates the matrix equation entrywise from A(0) = I, projecting back
// onto the group at every mesh node before continuing.  Throws
// std::runtime_error on blow-up or when a pre-projection defect exceeds 1e-6.
GroupTrajectory solve_group_equation(const LieGroupEquation& eq, double t1,
                                     const IntegrateOptions& opt = {});

// Moebius action of SL(2,R) on the projectively extended real line; infinity
// is an ordinary value (use std::numeric_limits<double>::infinity()).
double act(const Eigen::Matrix2d& a, double x);

// Linear action on (x, v).
Eigen::Vector2d act(const Eigen::Matrix2d& a, const Eigen::Vector2d& xv);

// Spinor action on C^2.
Eigen::Vector2cd act(const Eigen::Matrix2cd& a, const Eigen::Vector2cd& psi);

// Real coordinates (x1, x2, y1, y2) of an SU(2) matrix [[a, b], [-b*, a*]]
// with a = x1 + i y1 and b = x2 + i y2.
Eigen::Vector4d su2_real_coordinates(const Eigen::Matrix2cd& g);

// Wei-Norman exponents as a trajectory of the coupled exponent ODEs.  When
// the leading exponent hits a pole before t1 (a genuine feature of the
// factorization chart, not a solver failure), `pole` is set and the
// trajectory ends at `pole_time`.
struct WeiNormanResult {
  Trajectory v;
  bool pole = false;
  double pole_time = 0.0;
};

// Exponents for the sl(2) case:
//   v1' = b1 + b2 v1 + b3 v1^2,  v2' = b2 + 2 b3 v1,  v3' = e^{v2} b3,
// all starting from zero.
WeiNormanResult wei_norman_sl2(const Expr& b1, const Expr& b2, const Expr& b3,
                               double t1, const IntegrateOptions& opt = {});

// Exponents for the six-dimensional quadratic-Hamiltonian algebra; the first
// three equations coincide with the sl(2) case and the rest are
//   v4' = b4 + (1/2) b2 v4 + b1 v5,
//   v5' = b5 - b3 v4 - (1/2) b2 v5,
//   v6' = b6 - b5 v4 + (1/2) b3 v4^2 - (1/2) b1 v5^2.
WeiNormanResult wei_norman_quadratic(const std::array<Expr, 6>& b, double t1,
                                     const IntegrateOptions& opt = {});

// The SL(2,R) matrix of the factorized product
// exp(-v1 a1) exp(-v2 a2) exp(-v3 a3) in the standard basis.
Eigen::Matrix2d wei_norman_sl2_matrix(double v1, double v2, double v3);

// Exponents (v1..v4) at time t1 for a particle of mass m(t) under a linear
// potential S(t) x, computed by nested adaptive quadratures:
//   v1 = int 1/m,  v2 = int (1/m) int S,  v3 = int S,
//   v4 = -int S (int (1/m) int S) - int (1/(2m)) (int S)^2.
std::array<double, 4> heisenberg_quadratures(const Expr& m, const Expr& s,
                                             double t1);

// Closed-form sl(2) Wei-Norman exponents for an exponentially damped
// oscillator with b1 = e^{rt}/m0 and b3 = m0 e^{-rt} w0^2.  The discriminant
// root sqrt(r^2 - 4 w0^2) may be imaginary; evaluation goes through complex
// arithmetic and lands back on the real branch.  Throws std::domain_error at
// a pole of the leading exponent.
std::array<double, 3> caldirola_kanai_closed(double m0, double r, double w0,
                                             double t);

// Closed-form exponents for b1 = 1/m, b3 = m w0^2 / (t + k)^2, with
// discriminant root sqrt(1 - 4 w0^2).  Same branch and pole behavior as
// above.  Requires t > -k.
std::array<double, 3> tplusk_closed(double m, double w0, double k, double t);

// Coefficient transformation law under a curve abar = (alpha, beta, gamma,
// delta) in SL(2,R):
//   b3' = delta^2 b3 - delta gamma b2 + gamma^2 b1 + gamma delta' - delta gamma',
//   b2' = -2 beta delta b3 + (alpha delta + beta gamma) b2 - 2 alpha gamma b1
//         + delta alpha' - alpha delta' + beta gamma' - gamma beta',
//   b1' = beta^2 b3 - alpha beta b2 + alpha^2 b1 + alpha beta' - beta alpha'.
// The unit-determinant precondition is checked on sample times in
// [check_t0, check_t1] to 1e-10; throws std::invalid_argument on violation.
std::array<Expr, 3> transform_coefficients(const std::array<Expr, 4>& abar,
                                           const std::array<Expr, 3>& b,
                                           double check_t0 = 0.0,
                                           double check_t1 = 1.0);

// Reduction data for the oscillator x'' = -W^2(t) x built from one positive
// solution alpha1 of the same equation (trajectory of (alpha, dalpha)).
// The curve [[alpha1, 0], [dalpha1, 1/alpha1]] conjugates the original
// group equation to one with the single coefficient 1/alpha1^2.
class Sl2Reduction {
 public:
  explicit Sl2Reduction(Trajectory alpha);

  double reduced_b1(double t) const;      // 1 / alpha1(t)^2
  double log_alpha(double t) const;       // log |alpha1(t)|
  double ratio(double t) const;           // dalpha1(t) / alpha1(t)
  Eigen::Matrix2d frame(double t) const;  // [[alpha1, 0], [dalpha1, 1/alpha1]]

  double t0() const;
  double t1() const;

 private:
  Trajectory alpha_;
};

// Validates that `alpha` solves the oscillator for the given W^2 expression
// and that alpha1 stays safely away from zero on its mesh (no sign change,
// min |alpha1| at least 8% of max |alpha1|); throws std::domain_error on a
// zero crossing and std::invalid_argument when alpha does not solve the
// equation.
Sl2Reduction sl2_reduction_oscillator(const Expr& omega_sq,
                                      const Trajectory& alpha);

}  // namespace liekit
