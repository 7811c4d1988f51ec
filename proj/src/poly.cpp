#include "liekit/poly.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace liekit {

Poly Poly::constant(int nvars, const Rat& c) {
  Poly p(nvars);
  if (c != 0) p.terms_.emplace(std::vector<std::int32_t>(nvars, 0), c);
  return p;
}

Poly Poly::variable(int nvars, int i) {
  if (i < 0 || i >= nvars) throw std::invalid_argument("variable index out of range");
  std::vector<std::int32_t> e(nvars, 0);
  e[i] = 1;
  return monomial(std::move(e), 1);
}

Poly Poly::monomial(std::vector<std::int32_t> exps, const Rat& c) {
  Poly p(static_cast<int>(exps.size()));
  if (c != 0) p.terms_.emplace(std::move(exps), c);
  return p;
}

bool Poly::is_constant() const {
  if (terms_.empty()) return true;
  if (terms_.size() > 1) return false;
  for (std::int32_t e : terms_.begin()->first)
    if (e != 0) return false;
  return true;
}

Rat Poly::constant_value() const {
  if (terms_.empty()) return 0;
  return terms_.begin()->second;
}

void Poly::add_term(const std::vector<std::int32_t>& exps, const Rat& c) {
  if (c == 0) return;
  auto it = terms_.find(exps);
  if (it == terms_.end()) {
    terms_.emplace(exps, c);
  } else {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Poly& Poly::operator+=(const Poly& other) {
  if (nvars_ != other.nvars_) throw std::invalid_argument("variable count mismatch");
  for (const auto& [e, c] : other.terms_) add_term(e, c);
  return *this;
}

Poly& Poly::operator-=(const Poly& other) {
  if (nvars_ != other.nvars_) throw std::invalid_argument("variable count mismatch");
  for (const auto& [e, c] : other.terms_) add_term(e, -c);
  return *this;
}

Poly& Poly::operator*=(const Rat& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, v] : terms_) v *= c;
  return *this;
}

Poly operator+(Poly a, const Poly& b) { return a += b; }
Poly operator-(Poly a, const Poly& b) { return a -= b; }
Poly operator-(Poly a) { return a *= Rat(-1); }

Poly operator*(const Poly& a, const Poly& b) {
  if (a.nvars_ != b.nvars_) throw std::invalid_argument("variable count mismatch");
  Poly out(a.nvars_);
  std::vector<std::int32_t> e(a.nvars_);
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) {
      for (int i = 0; i < a.nvars_; ++i) e[i] = ea[i] + eb[i];
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

Poly Poly::diff(int var) const {
  if (var < 0 || var >= nvars_) throw std::invalid_argument("variable index out of range");
  Poly out(nvars_);
  for (const auto& [e, c] : terms_) {
    if (e[var] == 0) continue;
    std::vector<std::int32_t> e2 = e;
    e2[var] -= 1;
    out.add_term(e2, c * e[var]);
  }
  return out;
}

double Poly::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != nvars_)
    throw std::invalid_argument("evaluation point has wrong dimension");
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double term = c.convert_to<double>();
    for (int i = 0; i < nvars_; ++i) {
      if (e[i] != 0) term *= std::pow(x[i], static_cast<double>(e[i]));
    }
    sum += term;
  }
  return sum;
}

Rat Poly::eval_exact(std::span<const Rat> x) const {
  if (static_cast<int>(x.size()) != nvars_)
    throw std::invalid_argument("evaluation point has wrong dimension");
  Rat sum = 0;
  for (const auto& [e, c] : terms_) {
    Rat term = c;
    for (int i = 0; i < nvars_; ++i) {
      std::int32_t k = e[i];
      if (k == 0) continue;
      if (x[i] == 0 && k < 0) throw std::domain_error("zero raised to negative power");
      Rat base = x[i];
      if (k < 0) {
        base = Rat(denominator(base), numerator(base));
        k = -k;
      }
      for (std::int32_t j = 0; j < k; ++j) term *= base;
    }
    sum += term;
  }
  return sum;
}

bool Poly::operator==(const Poly& other) const {
  return nvars_ == other.nvars_ && terms_ == other.terms_;
}

Rat Poly::max_abs_coeff() const {
  Rat best = 0;
  for (const auto& [e, c] : terms_) {
    Rat a = c < 0 ? Rat(-c) : c;
    if (a > best) best = a;
  }
  return best;
}

std::string Poly::str(std::span<const std::string> names) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    Rat a = c < 0 ? Rat(-c) : c;
    if (first) {
      if (c < 0) os << "-";
      first = false;
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    bool has_vars = false;
    for (std::int32_t k : e) has_vars |= (k != 0);
    if (a != 1 || !has_vars) os << a;
    bool need_star = (a != 1 || !has_vars);
    for (int i = 0; i < nvars_; ++i) {
      if (e[i] == 0) continue;
      if (need_star) os << "*";
      if (static_cast<std::size_t>(i) < names.size())
        os << names[i];
      else
        os << "x" << i;
      if (e[i] != 1) os << "^" << e[i];
      need_star = true;
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------

RatFunc::RatFunc(Poly num) : num_(std::move(num)), den_(Poly::constant(num_.nvars(), 1)) {}

RatFunc::RatFunc(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw std::invalid_argument("zero denominator");
  if (num_.nvars() != den_.nvars()) throw std::invalid_argument("variable count mismatch");
  if (num_.is_zero()) den_ = Poly::constant(num_.nvars(), 1);
}

RatFunc RatFunc::constant(int nvars, const Rat& c) {
  return RatFunc(Poly::constant(nvars, c));
}

RatFunc RatFunc::variable(int nvars, int i) {
  return RatFunc(Poly::variable(nvars, i));
}

Poly RatFunc::as_polynomial() const {
  if (!is_polynomial()) throw std::logic_error("not a polynomial");
  Rat d = den_.constant_value();
  Poly out = num_;
  out *= Rat(1) / d;
  return out;
}

RatFunc& RatFunc::operator+=(const RatFunc& o) {
  if (den_ == o.den_) {
    num_ += o.num_;
  } else {
    num_ = num_ * o.den_ + o.num_ * den_;
    den_ = den_ * o.den_;
  }
  if (num_.is_zero()) den_ = Poly::constant(num_.nvars(), 1);
  return *this;
}

RatFunc& RatFunc::operator-=(const RatFunc& o) {
  if (den_ == o.den_) {
    num_ -= o.num_;
  } else {
    num_ = num_ * o.den_ - o.num_ * den_;
    den_ = den_ * o.den_;
  }
  if (num_.is_zero()) den_ = Poly::constant(num_.nvars(), 1);
  return *this;
}

RatFunc& RatFunc::operator*=(const RatFunc& o) {
  num_ = num_ * o.num_;
  den_ = den_ * o.den_;
  if (num_.is_zero()) den_ = Poly::constant(num_.nvars(), 1);
  return *this;
}

RatFunc& RatFunc::operator*=(const Rat& c) {
  num_ *= c;
  if (num_.is_zero()) den_ = Poly::constant(num_.nvars(), 1);
  return *this;
}

RatFunc RatFunc::diff(int var) const {
  if (is_polynomial()) {
    Poly p = num_.diff(var);
    p *= Rat(1) / den_.constant_value();
    return RatFunc(std::move(p));
  }
  Poly n = num_.diff(var) * den_ - num_ * den_.diff(var);
  return RatFunc(std::move(n), den_ * den_);
}

double RatFunc::eval(std::span<const double> x) const {
  double d = den_.eval(x);
  if (d == 0.0 || !std::isfinite(d)) throw std::domain_error("denominator vanishes");
  return num_.eval(x) / d;
}

bool RatFunc::operator==(const RatFunc& o) const {
  return num_ * o.den_ == o.num_ * den_;
}

std::string RatFunc::str(std::span<const std::string> names) const {
  if (is_polynomial()) {
    Rat d = den_.constant_value();
    if (d == 1) return num_.str(names);
  }
  return "(" + num_.str(names) + ")/(" + den_.str(names) + ")";
}

RatFunc operator+(RatFunc a, const RatFunc& b) { return a += b; }
RatFunc operator-(RatFunc a, const RatFunc& b) { return a -= b; }
RatFunc operator*(RatFunc a, const RatFunc& b) { return a *= b; }
RatFunc operator-(RatFunc a) { return a *= Rat(-1); }

RatFunc operator/(const RatFunc& a, const RatFunc& b) {
  if (b.is_zero()) throw std::invalid_argument("division by zero");
  RatFunc out(a.num() * b.den(), a.den() * b.num());
  return out;
}

}  // namespace liekit
