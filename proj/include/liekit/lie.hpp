#ifndef LIEKIT_LIE_HPP
#define LIEKIT_LIE_HPP

// Exact vector-field algebra: Lie brackets, span tests and Lie closure over
// the rationals, diagonal prolongations, structure-constant verification,
// and the generic-point rank test that determines how many particular
// solutions a superposition rule needs.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liekit/poly.hpp"

namespace liekit {

// Vector field on R^n with exact rational-function components; component i
// multiplies d/dx_i.
struct VectorField {
  std::vector<RatFunc> comp;

  VectorField() = default;
  explicit VectorField(int nvars) : comp(nvars, RatFunc(Poly(nvars))) {}

  int nvars() const { return static_cast<int>(comp.size()); }
  bool is_zero() const;
  bool is_polynomial() const;

  // Pointwise evaluation; throws std::domain_error where a denominator
  // vanishes.  out.size() == nvars().
  void eval(std::span<const double> x, std::span<double> out) const;

  std::string str(std::span<const std::string> names = {}) const;
};

VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);

template <RatScalar S>
VectorField operator*(const S& c, VectorField a) {
  for (auto& f : a.comp) f *= c;
  return a;
}

// [X,Y]^i = sum_j (X^j d_j Y^i - Y^j d_j X^i), exact.
VectorField bracket(const VectorField& x, const VectorField& y);

// Replicates the field across `copies` blocks of the base variables.
VectorField diagonal_prolongation(const VectorField& x, int copies);

// Exact linear-span tests over the rationals (cross-multiplied through the
// rational-function denominators, so they work for non-polynomial fields).
bool in_span(const VectorField& y, std::span<const VectorField> basis);
std::optional<std::vector<Rat>> expand_in_basis(const VectorField& y,
                                                std::span<const VectorField> basis);

struct LieClosureResult {
  enum class Status { Finite, ExceededCap };
  Status status = Status::Finite;
  std::vector<VectorField> basis;  // linearly independent by construction
  std::size_t dimension = 0;       // == basis.size()
  std::vector<std::string> log;    // which generator/bracket produced each element
};

// Smallest Lie algebra containing the generators, capped: if one more
// independent bracket would push the dimension past `cap` the search stops
// with status ExceededCap.  Requires cap >= gens.size().
LieClosureResult lie_closure(std::span<const VectorField> gens, std::size_t cap);

// c.at(a,b,g) holds the coefficient of X_g in [X_a, X_b].
struct StructureTable {
  int dim = 0;
  std::vector<Rat> c;  // dim^3 entries, (a,b,g) row-major

  static StructureTable zeros(int dim);
  Rat& at(int a, int b, int g) { return c[(a * dim + b) * dim + g]; }
  const Rat& at(int a, int b, int g) const { return c[(a * dim + b) * dim + g]; }
};

// Max over (a,b) of the largest |coefficient| in [X_a,X_b] - sum_g c_abg X_g,
// converted to double; exactly 0 means every relation holds identically.
double verify_structure_constants(std::span<const VectorField> fields,
                                  const StructureTable& table);

// Expands every bracket in the given basis; nullopt if some bracket falls
// outside the span (the fields do not close).
std::optional<StructureTable> structure_constants(std::span<const VectorField> basis);

// Smallest m <= max_m whose m-fold diagonal prolongations have full rank
// (= fields.size()) at a majority of `samples` random generic points.
// Sample points live in [-2,2]^(n*m) with no two coordinates closer than
// 1e-3.  Throws std::runtime_error when no m qualifies.
int minimal_m(std::span<const VectorField> fields, int max_m, int samples,
              std::uint64_t seed = 20260814u);

}  // namespace liekit

#endif
