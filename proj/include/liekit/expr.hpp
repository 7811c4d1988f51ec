#ifndef LIEKIT_EXPR_HPP
#define LIEKIT_EXPR_HPP

// Small immutable expression trees over real scalars.  Used for t-dependent
// ODE coefficients, symbolic assembly of transformed coefficients, and the
// CLI problem files.  Trees are shared_ptr-backed and never mutated after
// construction, so they can be evaluated from several threads at once.

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace liekit {

// Parse failure (bad syntax, unknown function).  offset() is the byte offset
// into the source string where the problem was noticed.
class ExprError : public std::runtime_error {
 public:
  ExprError(const std::string& msg, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Evaluation failure (unbound variable or a domain error such as log of a
// nonpositive number).  offset() points at the offending node's position in
// the original source, or npos for synthesized nodes.
class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& msg, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

enum class UnaryFn { Neg, Sin, Cos, Tan, Exp, Log, Sqrt, Sinh, Cosh, Tanh, Abs };
enum class BinOp { Add, Sub, Mul, Div, Pow };

// Variable bindings for evaluation.  Linear lookup; binding sets here are a
// handful of entries, a hash map would be slower.
class Env {
 public:
  Env() = default;
  Env(std::initializer_list<std::pair<std::string, double>> init);
  Env& set(std::string name, double value);
  const double* find(std::string_view name) const;

 private:
  std::vector<std::pair<std::string, double>> vars_;
};

class Expr {
 public:
  Expr();  // the constant 0

  static Expr number(double v);
  static Expr symbol(std::string name);
  static Expr unary(UnaryFn fn, Expr arg);
  static Expr binary(BinOp op, Expr lhs, Expr rhs);
  static Expr pow(Expr base, Expr exponent);

  double eval(const Env& env) const;

  // Exact derivative with respect to `var`.  The only simplification applied
  // anywhere is folding of operations whose operands are all literal numbers.
  Expr diff(std::string_view var) const;

  // Prints with the minimal parenthesization that reparses to the same tree.
  std::string str() const;

  bool identical(const Expr& other) const;

  bool is_number() const;
  double number_value() const;  // pre: is_number()

  struct Node;
  const Node* node() const { return n_.get(); }

 private:
  friend struct ExprAccess;  // parser-side construction, see expr.cpp
  explicit Expr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}
  std::shared_ptr<const Node> n_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr tan(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);
Expr sinh(const Expr& a);
Expr cosh(const Expr& a);
Expr tanh(const Expr& a);
Expr abs(const Expr& a);

// Grammar (^ binds tighter than unary minus, which binds tighter than * and /):
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := "-" factor | power
//   power  := base ("^" factor)?          (right associative)
//   base   := number | ident | ident "(" expr ")" | "(" expr ")"
// Throws ExprError with a byte offset on malformed input or an unknown
// function name.
Expr parse_expr(std::string_view text);

}  // namespace liekit

#endif
