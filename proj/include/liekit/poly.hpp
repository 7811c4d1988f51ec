#ifndef LIEKIT_POLY_HPP
#define LIEKIT_POLY_HPP

// Exact multivariate Laurent polynomials and quotients of them, with rational
// coefficients.  Exponents may be negative (x^-3 terms show up in several of
// the library's vector fields), and equality of quotients is decided by
// cross-multiplication so no GCD machinery is needed.

#include <boost/multiprecision/cpp_int.hpp>

#include <concepts>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace liekit {

using Rat = boost::multiprecision::cpp_rational;

class Poly {
 public:
  explicit Poly(int nvars = 0) : nvars_(nvars) {}  // the zero polynomial

  static Poly constant(int nvars, const Rat& c);
  static Poly variable(int nvars, int i);
  // One term c * x0^e0* x1^e1 * ... ; exps.size() fixes the variable count.
  static Poly monomial(std::vector<std::int32_t> exps, const Rat& c);

  int nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Rat constant_value() const;  // pre: is_constant()
  std::size_t term_count() const { return terms_.size(); }

  Poly& operator+=(const Poly& other);
  Poly& operator-=(const Poly& other);
  Poly& operator*=(const Rat& c);

  Poly diff(int var) const;

  double eval(std::span<const double> x) const;
  // Exact evaluation; throws std::domain_error on 0 raised to a negative power.
  Rat eval_exact(std::span<const Rat> x) const;

  bool operator==(const Poly& other) const;

  // Largest |coefficient| as a rational (0 for the zero polynomial).
  Rat max_abs_coeff() const;

  const std::map<std::vector<std::int32_t>, Rat>& terms() const { return terms_; }

  // Human-readable form for logs; variables print as x0, x1, ... unless
  // names are supplied.
  std::string str(std::span<const std::string> names = {}) const;

 private:
  void add_term(const std::vector<std::int32_t>& exps, const Rat& c);
  int nvars_;
  std::map<std::vector<std::int32_t>, Rat> terms_;  // canonical: no zero coeffs

  friend Poly operator*(const Poly& a, const Poly& b);
};

Poly operator+(Poly a, const Poly& b);
Poly operator-(Poly a, const Poly& b);
Poly operator*(const Poly& a, const Poly& b);
Poly operator-(Poly a);

// Exactly-Rat scalar type.  The scalar overloads below are constrained with
// it so that overload resolution never probes a foreign type (an Eigen
// expression, say) against Rat's promiscuous converting constructor.
template <class S>
concept RatScalar = std::same_as<std::remove_cvref_t<S>, Rat>;

template <RatScalar S>
Poly operator*(Poly a, const S& c) {
  a *= c;
  return a;
}

// num/den quotient of Laurent polynomials.  den is never zero; a zero num is
// normalized to 0/1.  No reduction to lowest terms is performed.
class RatFunc {
 public:
  RatFunc() : num_(0), den_(Poly::constant(0, 1)) {}
  RatFunc(Poly num);                 // num / 1
  RatFunc(Poly num, Poly den);       // throws std::invalid_argument if den == 0

  static RatFunc constant(int nvars, const Rat& c);
  static RatFunc variable(int nvars, int i);

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }
  int nvars() const { return num_.nvars(); }
  bool is_zero() const { return num_.is_zero(); }
  bool is_polynomial() const { return den_.is_constant(); }
  Poly as_polynomial() const;        // pre: is_polynomial()

  RatFunc& operator+=(const RatFunc& o);
  RatFunc& operator-=(const RatFunc& o);
  RatFunc& operator*=(const RatFunc& o);
  RatFunc& operator*=(const Rat& c);

  RatFunc diff(int var) const;       // quotient rule

  // Throws std::domain_error when the denominator vanishes at x.
  double eval(std::span<const double> x) const;

  bool operator==(const RatFunc& o) const;  // num*o.den == o.num*den

  std::string str(std::span<const std::string> names = {}) const;

 private:
  Poly num_, den_;
};

RatFunc operator+(RatFunc a, const RatFunc& b);
RatFunc operator-(RatFunc a, const RatFunc& b);
RatFunc operator*(RatFunc a, const RatFunc& b);
RatFunc operator/(const RatFunc& a, const RatFunc& b);  // throws if b == 0
RatFunc operator-(RatFunc a);

}  // namespace liekit

#endif
