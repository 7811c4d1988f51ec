#include "liekit/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

namespace liekit {

namespace {
constexpr std::size_t knpos = std::string::npos;
}

ExprError::ExprError(const std::string& msg, std::size_t offset)
    : std::runtime_error(msg + " (byte " + std::to_string(offset) + ")"),
      offset_(offset) {}

EvalError::EvalError(const std::string& msg, std::size_t offset)
    : std::runtime_error(offset == knpos ? msg
                                         : msg + " (byte " + std::to_string(offset) + ")"),
      offset_(offset) {}

Env::Env(std::initializer_list<std::pair<std::string, double>> init) {
  for (const auto& kv : init) set(kv.first, kv.second);
}

Env& Env::set(std::string name, double value) {
  for (auto& kv : vars_) {
    if (kv.first == name) {
      kv.second = value;
      return *this;
    }
  }
  vars_.emplace_back(std::move(name), value);
  return *this;
}

const double* Env::find(std::string_view name) const {
  for (const auto& kv : vars_) {
    if (kv.first == name) return &kv.second;
  }
  return nullptr;
}

struct Expr::Node {
  enum class Kind { Num, Sym, Unary, Bin } kind;
  double value = 0.0;
  std::string name;
  UnaryFn fn = UnaryFn::Neg;
  BinOp op = BinOp::Add;
  std::shared_ptr<const Node> a, b;
  std::size_t src = knpos;
};

// Lets the parser (plain functions in this file) move node pointers in and
// out of Expr without widening the public interface.
struct ExprAccess {
  static Expr wrap(std::shared_ptr<const Expr::Node> n) { return Expr(std::move(n)); }
  static std::shared_ptr<const Expr::Node> ptr(const Expr& e) { return e.n_; }
};

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_num(double v, std::size_t src = knpos) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Num;
  n->value = v;
  n->src = src;
  return n;
}

NodePtr make_sym(std::string name, std::size_t src = knpos) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Sym;
  n->name = std::move(name);
  n->src = src;
  return n;
}

bool is_num(const NodePtr& n) { return n->kind == Node::Kind::Num; }

double eval_unary(UnaryFn fn, double x, std::size_t src) {
  switch (fn) {
    case UnaryFn::Neg: return -x;
    case UnaryFn::Sin: return std::sin(x);
    case UnaryFn::Cos: return std::cos(x);
    case UnaryFn::Tan: return std::tan(x);
    case UnaryFn::Exp: return std::exp(x);
    case UnaryFn::Log:
      if (x <= 0.0) throw EvalError("log of nonpositive value", src);
      return std::log(x);
    case UnaryFn::Sqrt:
      if (x < 0.0) throw EvalError("sqrt of negative value", src);
      return std::sqrt(x);
    case UnaryFn::Sinh: return std::sinh(x);
    case UnaryFn::Cosh: return std::cosh(x);
    case UnaryFn::Tanh: return std::tanh(x);
    case UnaryFn::Abs: return std::fabs(x);
  }
  return 0.0;
}

bool nearly_integer(double v) {
  return std::isfinite(v) && v == std::nearbyint(v) && std::fabs(v) < 1e9;
}

// a^b.  When the exponent is a literal this follows std::pow semantics with
// the usual domain checks; a non-literal exponent is defined as exp(b*log a)
// and therefore requires a > 0.
double eval_pow(double a, double b, bool literal_exponent, std::size_t src) {
  if (literal_exponent) {
    if (a == 0.0 && b < 0.0) throw EvalError("zero raised to a negative power", src);
    if (a < 0.0 && !nearly_integer(b))
      throw EvalError("negative base with non-integer exponent", src);
    return std::pow(a, b);
  }
  if (a <= 0.0)
    throw EvalError("nonpositive base with non-constant exponent", src);
  return std::exp(b * std::log(a));
}

double eval_bin(BinOp op, double a, double b, bool literal_exponent, std::size_t src) {
  switch (op) {
    case BinOp::Add: return a + b;
    case BinOp::Sub: return a - b;
    case BinOp::Mul: return a * b;
    case BinOp::Div:
      if (b == 0.0) throw EvalError("division by zero", src);
      return a / b;
    case BinOp::Pow: return eval_pow(a, b, literal_exponent, src);
  }
  return 0.0;
}

}  // namespace

Expr::Expr() : n_(make_num(0.0)) {}

Expr Expr::number(double v) { return Expr(make_num(v)); }

Expr Expr::symbol(std::string name) { return Expr(make_sym(std::move(name))); }

Expr Expr::unary(UnaryFn fn, Expr arg) {
  // Fold literal subtrees, and nothing else.
  if (is_num(arg.n_)) {
    double folded;
    try {
      folded = eval_unary(fn, arg.n_->value, arg.n_->src);
    } catch (const EvalError&) {
      folded = std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isfinite(folded)) return Expr(make_num(folded, arg.n_->src));
  }
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Unary;
  n->fn = fn;
  n->a = arg.n_;
  n->src = arg.n_->src;
  return Expr(std::move(n));
}

Expr Expr::binary(BinOp op, Expr lhs, Expr rhs) {
  if (is_num(lhs.n_) && is_num(rhs.n_)) {
    double folded;
    try {
      folded = eval_bin(op, lhs.n_->value, rhs.n_->value, true, lhs.n_->src);
    } catch (const EvalError&) {
      folded = std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isfinite(folded)) return Expr(make_num(folded, lhs.n_->src));
  }
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Bin;
  n->op = op;
  n->a = lhs.n_;
  n->b = rhs.n_;
  n->src = lhs.n_->src;
  return Expr(std::move(n));
}

Expr Expr::pow(Expr base, Expr exponent) {
  return binary(BinOp::Pow, std::move(base), std::move(exponent));
}

bool Expr::is_number() const { return n_->kind == Node::Kind::Num; }

double Expr::number_value() const { return n_->value; }

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(BinOp::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(BinOp::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(BinOp::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(BinOp::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(UnaryFn::Neg, a); }

Expr sin(const Expr& a) { return Expr::unary(UnaryFn::Sin, a); }
Expr cos(const Expr& a) { return Expr::unary(UnaryFn::Cos, a); }
Expr tan(const Expr& a) { return Expr::unary(UnaryFn::Tan, a); }
Expr exp(const Expr& a) { return Expr::unary(UnaryFn::Exp, a); }
Expr log(const Expr& a) { return Expr::unary(UnaryFn::Log, a); }
Expr sqrt(const Expr& a) { return Expr::unary(UnaryFn::Sqrt, a); }
Expr sinh(const Expr& a) { return Expr::unary(UnaryFn::Sinh, a); }
Expr cosh(const Expr& a) { return Expr::unary(UnaryFn::Cosh, a); }
Expr tanh(const Expr& a) { return Expr::unary(UnaryFn::Tanh, a); }
Expr abs(const Expr& a) { return Expr::unary(UnaryFn::Abs, a); }

double Expr::eval(const Env& env) const {
  const Node* n = n_.get();
  switch (n->kind) {
    case Node::Kind::Num: return n->value;
    case Node::Kind::Sym: {
      const double* v = env.find(n->name);
      if (!v) throw EvalError("unbound variable '" + n->name + "'", n->src);
      return *v;
    }
    case Node::Kind::Unary:
      return eval_unary(n->fn, Expr(n->a).eval(env), n->src);
    case Node::Kind::Bin: {
      double a = Expr(n->a).eval(env);
      double b = Expr(n->b).eval(env);
      return eval_bin(n->op, a, b, n->b->kind == Node::Kind::Num, n->src);
    }
  }
  return 0.0;
}

Expr Expr::diff(std::string_view var) const {
  const Node* n = n_.get();
  switch (n->kind) {
    case Node::Kind::Num: return number(0.0);
    case Node::Kind::Sym: return number(n->name == var ? 1.0 : 0.0);
    case Node::Kind::Unary: {
      Expr u(n->a);
      Expr du = u.diff(var);
      switch (n->fn) {
        case UnaryFn::Neg: return -du;
        case UnaryFn::Sin: return cos(u) * du;
        case UnaryFn::Cos: return -(sin(u) * du);
        case UnaryFn::Tan: return du / pow(cos(u), number(2.0));
        case UnaryFn::Exp: return exp(u) * du;
        case UnaryFn::Log: return du / u;
        case UnaryFn::Sqrt: return du / (number(2.0) * sqrt(u));
        case UnaryFn::Sinh: return cosh(u) * du;
        case UnaryFn::Cosh: return sinh(u) * du;
        case UnaryFn::Tanh: return du / pow(cosh(u), number(2.0));
        case UnaryFn::Abs: return (u / abs(u)) * du;  // undefined at u==0
      }
      return number(0.0);
    }
    case Node::Kind::Bin: {
      Expr a(n->a), b(n->b);
      Expr da = a.diff(var), db = b.diff(var);
      switch (n->op) {
        case BinOp::Add: return da + db;
        case BinOp::Sub: return da - db;
        case BinOp::Mul: return da * b + a * db;
        case BinOp::Div: return (da * b - a * db) / pow(b, number(2.0));
        case BinOp::Pow:
          if (b.is_number())  // d(a^c) = c a^(c-1) da
            return b * pow(a, b - number(1.0)) * da;
          // General case via a^b = exp(b log a), valid on a > 0 like eval.
          return pow(a, b) * (db * log(a) + b * da / a);
      }
      return number(0.0);
    }
  }
  return number(0.0);
}

bool Expr::identical(const Expr& other) const {
  const Node* x = n_.get();
  const Node* y = other.n_.get();
  if (x == y) return true;
  if (x->kind != y->kind) return false;
  switch (x->kind) {
    case Node::Kind::Num: return x->value == y->value;
    case Node::Kind::Sym: return x->name == y->name;
    case Node::Kind::Unary:
      return x->fn == y->fn && Expr(x->a).identical(Expr(y->a));
    case Node::Kind::Bin:
      return x->op == y->op && Expr(x->a).identical(Expr(y->a)) &&
             Expr(x->b).identical(Expr(y->b));
  }
  return false;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

// Precedence levels used by both the printer and (implicitly) the grammar:
// add/sub 1, mul/div 2, unary minus 3, pow 4, atoms 5.
int precedence(const Node* n) {
  switch (n->kind) {
    case Node::Kind::Num:
      // "-2" (and "-0") reparse through unary minus, so a literal that would
      // print with a leading sign has the precedence of that minus.
      return std::signbit(n->value) ? 3 : 5;
    case Node::Kind::Sym: return 5;
    case Node::Kind::Unary: return n->fn == UnaryFn::Neg ? 3 : 5;
    case Node::Kind::Bin:
      switch (n->op) {
        case BinOp::Add:
        case BinOp::Sub: return 1;
        case BinOp::Mul:
        case BinOp::Div: return 2;
        case BinOp::Pow: return 4;
      }
  }
  return 5;
}

const char* fn_name(UnaryFn fn) {
  switch (fn) {
    case UnaryFn::Neg: return "-";
    case UnaryFn::Sin: return "sin";
    case UnaryFn::Cos: return "cos";
    case UnaryFn::Tan: return "tan";
    case UnaryFn::Exp: return "exp";
    case UnaryFn::Log: return "log";
    case UnaryFn::Sqrt: return "sqrt";
    case UnaryFn::Sinh: return "sinh";
    case UnaryFn::Cosh: return "cosh";
    case UnaryFn::Tanh: return "tanh";
    case UnaryFn::Abs: return "abs";
  }
  return "?";
}

void print_node(const Node* n, std::string& out);

void print_child(const Node* c, std::string& out, bool need_parens) {
  if (need_parens) out += '(';
  print_node(c, out);
  if (need_parens) out += ')';
}

void print_node(const Node* n, std::string& out) {
  switch (n->kind) {
    case Node::Kind::Num: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n->value);
      out += buf;
      return;
    }
    case Node::Kind::Sym:
      out += n->name;
      return;
    case Node::Kind::Unary:
      if (n->fn == UnaryFn::Neg) {
        out += '-';
        print_child(n->a.get(), out, precedence(n->a.get()) < 3);
      } else {
        out += fn_name(n->fn);
        out += '(';
        print_node(n->a.get(), out);
        out += ')';
      }
      return;
    case Node::Kind::Bin: {
      int p = precedence(n);
      const Node* l = n->a.get();
      const Node* r = n->b.get();
      if (n->op == BinOp::Pow) {
        // Right associative; the base must be an atom to survive reparsing.
        print_child(l, out, precedence(l) < 5);
        out += '^';
        print_child(r, out, precedence(r) < 3);
      } else {
        const char* op = n->op == BinOp::Add   ? " + "
                         : n->op == BinOp::Sub ? " - "
                         : n->op == BinOp::Mul ? "*"
                                               : "/";
        print_child(l, out, precedence(l) < p);
        out += op;
        // Same-precedence right children need parens to keep left association.
        print_child(r, out, precedence(r) <= p);
      }
      return;
    }
  }
}

}  // namespace

std::string Expr::str() const {
  std::string out;
  print_node(n_.get(), out);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Parser {
  std::string_view src;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }

  bool eof() {
    skip_ws();
    return pos >= src.size();
  }

  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }

  bool consume(char c) {
    if (peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t at) {
    throw ExprError(msg, at);
  }

  NodePtr parse_expr_rule() {
    NodePtr lhs = parse_term();
    for (;;) {
      char c = peek();
      if (c == '+' || c == '-') {
        ++pos;
        NodePtr rhs = parse_term();
        lhs = ExprAccess::ptr(Expr::binary(c == '+' ? BinOp::Add : BinOp::Sub,
                                           ExprAccess::wrap(lhs),
                                           ExprAccess::wrap(rhs)));
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      char c = peek();
      if (c == '*' || c == '/') {
        ++pos;
        NodePtr rhs = parse_factor();
        lhs = ExprAccess::ptr(Expr::binary(c == '*' ? BinOp::Mul : BinOp::Div,
                                           ExprAccess::wrap(lhs),
                                           ExprAccess::wrap(rhs)));
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_factor() {
    skip_ws();
    if (pos < src.size() && src[pos] == '-') {
      std::size_t at = pos;
      ++pos;
      NodePtr inner = parse_factor();
      NodePtr folded =
          ExprAccess::ptr(Expr::unary(UnaryFn::Neg, ExprAccess::wrap(inner)));
      return retag(folded, at);
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_base();
    skip_ws();
    if (pos < src.size() && src[pos] == '^') {
      ++pos;
      NodePtr exponent = parse_factor();
      return ExprAccess::ptr(Expr::binary(BinOp::Pow, ExprAccess::wrap(base),
                                          ExprAccess::wrap(exponent)));
    }
    return base;
  }

  NodePtr parse_base() {
    skip_ws();
    if (pos >= src.size()) fail("unexpected end of input", pos);
    std::size_t at = pos;
    char c = src[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    if (c == '(') {
      ++pos;
      NodePtr inner = parse_expr_rule();
      if (!consume(')')) fail("expected ')'", pos);
      return inner;
    }
    fail(std::string("unexpected character '") + c + "'", at);
  }

  NodePtr parse_number() {
    std::size_t at = pos;
    double value = 0.0;
    const char* first = src.data() + pos;
    const char* last = src.data() + src.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc()) fail("malformed number", at);
    pos += static_cast<std::size_t>(res.ptr - first);
    return make_num(value, at);
  }

  NodePtr parse_ident() {
    std::size_t at = pos;
    while (pos < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
      ++pos;
    std::string name(src.substr(at, pos - at));
    skip_ws();
    if (pos < src.size() && src[pos] == '(') {
      static const std::array<std::pair<std::string_view, UnaryFn>, 10> fns{{
          {"sin", UnaryFn::Sin}, {"cos", UnaryFn::Cos}, {"tan", UnaryFn::Tan},
          {"exp", UnaryFn::Exp}, {"log", UnaryFn::Log}, {"sqrt", UnaryFn::Sqrt},
          {"sinh", UnaryFn::Sinh}, {"cosh", UnaryFn::Cosh}, {"tanh", UnaryFn::Tanh},
          {"abs", UnaryFn::Abs},
      }};
      for (const auto& [fname, fn] : fns) {
        if (name == fname) {
          ++pos;  // '('
          NodePtr arg = parse_expr_rule();
          if (!consume(')')) fail("expected ')'", pos);
          NodePtr folded = ExprAccess::ptr(Expr::unary(fn, ExprAccess::wrap(arg)));
          return retag(folded, at);
        }
      }
      fail("unknown function '" + name + "'", at);
    }
    return make_sym(std::move(name), at);
  }

  static NodePtr retag(NodePtr n, std::size_t at) {
    if (n->src != knpos) return n;
    auto copy = std::make_shared<Node>(*n);
    copy->src = at;
    return copy;
  }
};

}  // namespace

Expr parse_expr(std::string_view text) {
  Parser p{text};
  NodePtr root = p.parse_expr_rule();
  if (!p.eof()) p.fail("unexpected trailing input", p.pos);
  return ExprAccess::wrap(std::move(root));
}

}  // namespace liekit
