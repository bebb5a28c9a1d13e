#include "hamfold/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

namespace hamfold {

struct Expr::Node {
  NodeKind kind = NodeKind::constant;
  double value = 0.0;
  Symbol sym{};
  Func fn = Func::sin;
  std::vector<Expr> children;
};

namespace {

const char* func_name(Func f) {
  switch (f) {
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::exp: return "exp";
    case Func::log: return "log";
    case Func::sqrt: return "sqrt";
  }
  return "?";
}

std::optional<Func> func_from_name(std::string_view name) {
  if (name == "sin") return Func::sin;
  if (name == "cos") return Func::cos;
  if (name == "exp") return Func::exp;
  if (name == "log") return Func::log;
  if (name == "sqrt") return Func::sqrt;
  return std::nullopt;
}

// Shortest text that parses back to the same double, for readable output.
std::string format_constant(double v) {
  std::array<char, 32> buf{};
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf.data(), buf.size(), "%.*g", prec, v);
    if (std::strtod(buf.data(), nullptr) == v) break;
  }
  return buf.data();
}

bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

}  // namespace

// ---------------------------------------------------------------------------
// Symbol

std::string Symbol::name() const {
  switch (kind) {
    case SymbolKind::time: return "t";
    case SymbolKind::coord: return "q" + std::to_string(index);
    case SymbolKind::velocity: return "qd" + std::to_string(index);
    case SymbolKind::momentum: return "p" + std::to_string(index);
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Expr construction

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::constant;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::symbol(Symbol s) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::symbol;
  n->sym = s;
  return Expr(std::move(n));
}

Expr Expr::raw_sum(Expr a, Expr b) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::sum;
  n->children = {std::move(a), std::move(b)};
  return Expr(std::move(n));
}

Expr Expr::raw_product(Expr a, Expr b) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::product;
  n->children = {std::move(a), std::move(b)};
  return Expr(std::move(n));
}

Expr Expr::raw_quotient(Expr a, Expr b) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::quotient;
  n->children = {std::move(a), std::move(b)};
  return Expr(std::move(n));
}

Expr Expr::raw_power(Expr base, Expr exponent) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::power;
  n->children = {std::move(base), std::move(exponent)};
  return Expr(std::move(n));
}

Expr Expr::raw_negation(Expr a) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::negation;
  n->children = {std::move(a)};
  return Expr(std::move(n));
}

Expr Expr::raw_function(Func f, Expr a) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::function;
  n->fn = f;
  n->children = {std::move(a)};
  return Expr(std::move(n));
}

NodeKind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
Symbol Expr::symbol_value() const { return node_->sym; }
Func Expr::func() const { return node_->fn; }
std::span<const Expr> Expr::children() const { return node_->children; }

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case NodeKind::constant: return x.value == y.value;
    case NodeKind::symbol: return x.sym == y.sym;
    case NodeKind::function:
      if (x.fn != y.fn) return false;
      break;
    default: break;
  }
  if (x.children.size() != y.children.size()) return false;
  for (std::size_t i = 0; i < x.children.size(); ++i) {
    if (!(x.children[i] == y.children[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Simplifying constructors

namespace {

double apply_func(Func f, double x) {
  switch (f) {
    case Func::sin: return std::sin(x);
    case Func::cos: return std::cos(x);
    case Func::exp: return std::exp(x);
    case Func::log: return std::log(x);
    case Func::sqrt: return std::sqrt(x);
  }
  return std::nan("");
}

bool func_domain_ok(Func f, double x) {
  if (f == Func::log) return x > 0.0;
  if (f == Func::sqrt) return x >= 0.0;
  return true;
}

bool power_domain_ok(double base, double exponent) {
  if (base < 0.0 && !is_integer(exponent)) return false;
  if (base == 0.0 && exponent < 0.0) return false;
  return true;
}

// Folded constants must stay finite; otherwise keep the node symbolic so the
// domain error surfaces at evaluation.
std::optional<Expr> folded(double v) {
  if (std::isfinite(v)) return Expr::constant(v);
  return std::nullopt;
}

}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) {
    if (auto f = folded(a.value() + b.value())) return *f;
  }
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return Expr::raw_sum(a, b);
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr::constant(-a.value());
  if (a.kind() == NodeKind::negation) return a.children()[0];
  return Expr::raw_negation(a);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_constant(0.0)) return a;
  return a + (-b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) {
    if (auto f = folded(a.value() * b.value())) return *f;
  }
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  if (b.is_constant() && !a.is_constant()) return b * a;
  if (a.is_constant() && b.kind() == NodeKind::product && b.children()[0].is_constant()) {
    if (auto f = folded(a.value() * b.children()[0].value())) return *f * b.children()[1];
  }
  return Expr::raw_product(a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant() && b.value() != 0.0) {
    if (auto f = folded(a.value() / b.value())) return *f;
  }
  if (a.is_constant(0.0)) return Expr::constant(0.0);
  if (b.is_constant(1.0)) return a;
  if (b.is_constant() && b.value() != 0.0 && a.kind() == NodeKind::product && a.children()[0].is_constant()) {
    if (auto f = folded(a.children()[0].value() / b.value())) return *f * a.children()[1];
  }
  return Expr::raw_quotient(a, b);
}

Expr pow(const Expr& base, const Expr& exponent) {
  if (exponent.is_constant(0.0)) return Expr::constant(1.0);
  if (exponent.is_constant(1.0)) return base;
  if (base.is_constant() && exponent.is_constant() &&
      power_domain_ok(base.value(), exponent.value())) {
    if (auto f = folded(std::pow(base.value(), exponent.value()))) return *f;
  }
  return Expr::raw_power(base, exponent);
}

Expr apply(Func f, const Expr& a) {
  if (a.is_constant() && func_domain_ok(f, a.value())) {
    if (auto v = folded(apply_func(f, a.value()))) return *v;
  }
  return Expr::raw_function(f, a);
}

// ---------------------------------------------------------------------------
// Parser

ParseError::ParseError(ErrorCode code, std::size_t offset, std::vector<std::string> expected,
                       const std::string& message)
    : Error(code, "expr", message), offset_(offset), expected_(std::move(expected)) {}

namespace {

class Parser {
 public:
  Parser(std::string_view src, Grammar grammar) : src_(src), grammar_(grammar) {}

  Expr parse_all() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) fail({"+", "-", "*", "/", "^", "end of input"});
    return e;
  }

 private:
  std::string_view src_;
  Grammar grammar_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  [[noreturn]] void fail(std::vector<std::string> expected) {
    std::string msg = "syntax error at offset " + std::to_string(pos_);
    if (pos_ < src_.size()) {
      msg += " near '" + std::string(1, src_[pos_]) + "'";
    } else {
      msg += " (end of input)";
    }
    msg += "; expected one of:";
    for (const auto& e : expected) msg += " " + e;
    throw ParseError(ErrorCode::parse_syntax, pos_, std::move(expected), msg);
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      char c = peek();
      if (c == '+') {
        ++pos_;
        lhs = Expr::raw_sum(lhs, parse_term());
      } else if (c == '-') {
        ++pos_;
        lhs = Expr::raw_sum(lhs, Expr::raw_negation(parse_term()));
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    for (;;) {
      char c = peek();
      if (c == '*') {
        ++pos_;
        lhs = Expr::raw_product(lhs, parse_factor());
      } else if (c == '/') {
        ++pos_;
        lhs = Expr::raw_quotient(lhs, parse_factor());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_factor() {
    Expr base = parse_atom();
    if (peek() == '^') {
      ++pos_;
      return Expr::raw_power(base, parse_factor());
    }
    return base;
  }

  Expr parse_atom() {
    char c = peek();
    if (c == '-') {
      ++pos_;
      return Expr::raw_negation(parse_atom());
    }
    if (c == '(') {
      ++pos_;
      Expr inner = parse_expr();
      if (peek() != ')') fail({")"});
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail({"number", "symbol", "function", "(", "-"});
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) {
      pos_ = start;
      fail({"number"});
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // not an exponent; leave 'e' for the caller
    }
    double value = 0.0;
    auto text = src_.substr(start, pos_ - start);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
      pos_ = start;
      throw ParseError(ErrorCode::parse_syntax, start, {"finite number"},
                       "numeric literal '" + std::string(text) + "' at offset " +
                           std::to_string(start) + " is not a finite double");
    }
    return Expr::constant(value);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                  src_[pos_] == '_')) {
      ++pos_;
    }
    std::string_view name = src_.substr(start, pos_ - start);
    if (auto f = func_from_name(name)) {
      if (peek() != '(') fail({"("});
      ++pos_;
      Expr arg = parse_expr();
      if (peek() != ')') fail({")"});
      ++pos_;
      return Expr::raw_function(*f, arg);
    }
    if (auto s = parse_symbol(name)) return Expr::symbol(*s);
    const std::size_t after = pos_;
    if (peek() == '(') {
      pos_ = start;
      throw ParseError(ErrorCode::unknown_function, start, {"sin", "cos", "exp", "log", "sqrt"},
                       "unknown function '" + std::string(name) + "' at offset " +
                           std::to_string(start));
    }
    pos_ = after;
    std::vector<std::string> expected =
        grammar_ == Grammar::lagrangian ? std::vector<std::string>{"t", "q<k>", "qd<k>"}
                                        : std::vector<std::string>{"t", "q<k>", "p<k>"};
    throw ParseError(ErrorCode::malformed_symbol, start, expected,
                     "malformed symbol '" + std::string(name) + "' at offset " +
                         std::to_string(start));
  }

  std::optional<Symbol> parse_symbol(std::string_view name) const {
    if (name == "t") return Symbol::t();
    auto indexed = [](std::string_view digits) -> std::optional<int> {
      if (digits.empty() || digits.size() > 6 || digits[0] == '0') return std::nullopt;
      int k = 0;
      for (char c : digits) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        k = k * 10 + (c - '0');
      }
      return k;
    };
    if (grammar_ == Grammar::lagrangian && name.starts_with("qd")) {
      if (auto k = indexed(name.substr(2))) return Symbol::qd(*k);
      return std::nullopt;
    }
    if (grammar_ == Grammar::phase && name.starts_with("p")) {
      if (auto k = indexed(name.substr(1))) return Symbol::p(*k);
      return std::nullopt;
    }
    if (name.starts_with("q")) {
      if (auto k = indexed(name.substr(1))) return Symbol::q(*k);
    }
    return std::nullopt;
  }
};

}  // namespace

Expr parse(std::string_view source, Grammar grammar) {
  return Parser(source, grammar).parse_all();
}

// ---------------------------------------------------------------------------
// Printing

std::string to_string(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::constant: {
      const double v = e.value();
      return v < 0.0 ? "(" + format_constant(v) + ")" : format_constant(v);
    }
    case NodeKind::symbol: return e.symbol_value().name();
    case NodeKind::negation: return "-" + to_string(e.children()[0]);
    case NodeKind::function:
      return std::string(func_name(e.func())) + "(" + to_string(e.children()[0]) + ")";
    default: break;
  }
  const char* op = "+";
  switch (e.kind()) {
    case NodeKind::sum: op = " + "; break;
    case NodeKind::product: op = " * "; break;
    case NodeKind::quotient: op = " / "; break;
    case NodeKind::power: op = " ^ "; break;
    default: break;
  }
  return "(" + to_string(e.children()[0]) + op + to_string(e.children()[1]) + ")";
}

// ---------------------------------------------------------------------------
// Differentiation

Expr differentiate(const Expr& e, Symbol wrt) {
  switch (e.kind()) {
    case NodeKind::constant: return Expr::constant(0.0);
    case NodeKind::symbol: return Expr::constant(e.symbol_value() == wrt ? 1.0 : 0.0);
    case NodeKind::sum:
      return differentiate(e.children()[0], wrt) + differentiate(e.children()[1], wrt);
    case NodeKind::negation: return -differentiate(e.children()[0], wrt);
    case NodeKind::product: {
      const Expr& a = e.children()[0];
      const Expr& b = e.children()[1];
      return differentiate(a, wrt) * b + a * differentiate(b, wrt);
    }
    case NodeKind::quotient: {
      const Expr& a = e.children()[0];
      const Expr& b = e.children()[1];
      Expr da = differentiate(a, wrt);
      Expr db = differentiate(b, wrt);
      if (db.is_constant(0.0)) return da / b;
      return (da * b - a * db) / pow(b, Expr::constant(2.0));
    }
    case NodeKind::power: {
      const Expr& a = e.children()[0];
      const Expr& b = e.children()[1];
      Expr da = differentiate(a, wrt);
      Expr db = differentiate(b, wrt);
      if (db.is_constant(0.0)) {
        return b * pow(a, b - Expr::constant(1.0)) * da;
      }
      return pow(a, b) * (db * apply(Func::log, a) + b * da / a);
    }
    case NodeKind::function: {
      const Expr& a = e.children()[0];
      Expr da = differentiate(a, wrt);
      if (da.is_constant(0.0)) return Expr::constant(0.0);
      switch (e.func()) {
        case Func::sin: return apply(Func::cos, a) * da;
        case Func::cos: return -(apply(Func::sin, a) * da);
        case Func::exp: return apply(Func::exp, a) * da;
        case Func::log: return da / a;
        case Func::sqrt: return da / (Expr::constant(2.0) * apply(Func::sqrt, a));
      }
    }
  }
  return Expr::constant(0.0);
}

std::set<Symbol> symbols_of(const Expr& e) {
  std::set<Symbol> out;
  std::function<void(const Expr&)> walk = [&](const Expr& x) {
    if (x.kind() == NodeKind::symbol) out.insert(x.symbol_value());
    for (const auto& c : x.children()) walk(c);
  };
  walk(e);
  return out;
}

Expr relabel(const Expr& e, const std::function<Symbol(Symbol)>& map) {
  switch (e.kind()) {
    case NodeKind::constant: return e;
    case NodeKind::symbol: return Expr::symbol(map(e.symbol_value()));
    case NodeKind::negation: return Expr::raw_negation(relabel(e.children()[0], map));
    case NodeKind::function: return Expr::raw_function(e.func(), relabel(e.children()[0], map));
    case NodeKind::sum:
      return Expr::raw_sum(relabel(e.children()[0], map), relabel(e.children()[1], map));
    case NodeKind::product:
      return Expr::raw_product(relabel(e.children()[0], map), relabel(e.children()[1], map));
    case NodeKind::quotient:
      return Expr::raw_quotient(relabel(e.children()[0], map), relabel(e.children()[1], map));
    case NodeKind::power:
      return Expr::raw_power(relabel(e.children()[0], map), relabel(e.children()[1], map));
  }
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

[[noreturn]] void domain_failure(const Expr& node, const std::string& what) {
  throw Error(ErrorCode::domain_error, "expr", what + " in subexpression " + to_string(node));
}

double lookup(SymbolKind kind, int index, double t, std::span<const double> q,
              std::span<const double> qd, std::span<const double> p) {
  std::span<const double> v;
  switch (kind) {
    case SymbolKind::time: return t;
    case SymbolKind::coord: v = q; break;
    case SymbolKind::velocity: v = qd; break;
    case SymbolKind::momentum: v = p; break;
  }
  if (index < 1 || static_cast<std::size_t>(index) > v.size()) {
    throw Error(ErrorCode::dimension_mismatch, "expr",
                "symbol " + Symbol{kind, index}.name() + " is outside the binding (size " +
                    std::to_string(v.size()) + ")");
  }
  return v[static_cast<std::size_t>(index - 1)];
}

double checked(const Expr& node, double result) {
  if (!std::isfinite(result)) domain_failure(node, "non-finite result");
  return result;
}

double binary(NodeKind kind, const Expr& node, double a, double b) {
  switch (kind) {
    case NodeKind::sum: return checked(node, a + b);
    case NodeKind::product: return checked(node, a * b);
    case NodeKind::quotient:
      if (b == 0.0) domain_failure(node, "division by zero");
      return checked(node, a / b);
    case NodeKind::power:
      if (a < 0.0 && !is_integer(b)) domain_failure(node, "non-integer power of negative base");
      if (a == 0.0 && b < 0.0) domain_failure(node, "division by zero (0 to a negative power)");
      return checked(node, std::pow(a, b));
    default: break;
  }
  return 0.0;
}

double unary(Func f, const Expr& node, double x) {
  if (f == Func::log && x <= 0.0) domain_failure(node, "log of nonpositive value");
  if (f == Func::sqrt && x < 0.0) domain_failure(node, "sqrt of negative value");
  return checked(node, apply_func(f, x));
}

}  // namespace

double evaluate(const Expr& e, const Binding& at) {
  switch (e.kind()) {
    case NodeKind::constant: return e.value();
    case NodeKind::symbol: {
      Symbol s = e.symbol_value();
      return lookup(s.kind, s.index, at.t, at.q, at.qd, at.p);
    }
    case NodeKind::negation: return -evaluate(e.children()[0], at);
    case NodeKind::function: return unary(e.func(), e, evaluate(e.children()[0], at));
    default: {
      const double a = evaluate(e.children()[0], at);
      const double b = evaluate(e.children()[1], at);
      return binary(e.kind(), e, a, b);
    }
  }
}

// ---------------------------------------------------------------------------
// CompiledExpr

CompiledExpr::CompiledExpr(const Expr& e) : expr_(e) {
  emit(e);
  std::size_t depth = 0;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::push_const:
      case Op::push_sym: ++depth; break;
      case Op::add:
      case Op::mul:
      case Op::div:
      case Op::pow: --depth; break;
      default: break;
    }
    max_depth_ = std::max(max_depth_, depth);
  }
}

void CompiledExpr::emit(const Expr& e) {
  Instr in{};
  switch (e.kind()) {
    case NodeKind::constant:
      in.op = Op::push_const;
      in.value = e.value();
      code_.push_back(in);
      return;
    case NodeKind::symbol:
      in.op = Op::push_sym;
      in.sym_kind = e.symbol_value().kind;
      in.sym_index = e.symbol_value().index;
      code_.push_back(in);
      return;
    case NodeKind::negation:
      emit(e.children()[0]);
      in.op = Op::neg;
      code_.push_back(in);
      return;
    case NodeKind::function:
      emit(e.children()[0]);
      in.node = static_cast<std::uint32_t>(nodes_.size());
      nodes_.push_back(e);
      in.op = Op::fn;
      in.fn = e.func();
      code_.push_back(in);
      return;
    default: break;
  }
  emit(e.children()[0]);
  emit(e.children()[1]);
  in.node = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(e);
  switch (e.kind()) {
    case NodeKind::sum: in.op = Op::add; break;
    case NodeKind::product: in.op = Op::mul; break;
    case NodeKind::quotient: in.op = Op::div; break;
    default: in.op = Op::pow; break;
  }
  code_.push_back(in);
}

double CompiledExpr::operator()(double t, std::span<const double> q, std::span<const double> qd,
                                std::span<const double> p) const {
  if (code_.empty()) return 0.0;
  std::array<double, 64> small{};
  std::vector<double> big;
  double* stack = small.data();
  if (max_depth_ > small.size()) {
    big.resize(max_depth_);
    stack = big.data();
  }
  std::size_t top = 0;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::push_const: stack[top++] = in.value; break;
      case Op::push_sym: stack[top++] = lookup(in.sym_kind, in.sym_index, t, q, qd, p); break;
      case Op::neg: stack[top - 1] = -stack[top - 1]; break;
      case Op::fn: stack[top - 1] = unary(in.fn, nodes_[in.node], stack[top - 1]); break;
      case Op::add:
        --top;
        stack[top - 1] = binary(NodeKind::sum, nodes_[in.node], stack[top - 1], stack[top]);
        break;
      case Op::mul:
        --top;
        stack[top - 1] = binary(NodeKind::product, nodes_[in.node], stack[top - 1], stack[top]);
        break;
      case Op::div:
        --top;
        stack[top - 1] = binary(NodeKind::quotient, nodes_[in.node], stack[top - 1], stack[top]);
        break;
      case Op::pow:
        --top;
        stack[top - 1] = binary(NodeKind::power, nodes_[in.node], stack[top - 1], stack[top]);
        break;
    }
  }
  return stack[0];
}

}  // namespace hamfold
