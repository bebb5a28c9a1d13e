#pragma once

// Immutable symbolic expressions over time, coordinates, velocities and
// momenta: parsing, exact differentiation and numeric evaluation.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hamfold/error.hpp"

namespace hamfold {

enum class SymbolKind : std::uint8_t { time, coord, velocity, momentum };

/// A named slot: `t`, `q<k>`, `qd<k>` or `p<k>` with k >= 1.
struct Symbol {
  SymbolKind kind = SymbolKind::time;
  int index = 0;  // 1-based; 0 for time

  static Symbol t() { return {SymbolKind::time, 0}; }
  static Symbol q(int k) { return {SymbolKind::coord, k}; }
  static Symbol qd(int k) { return {SymbolKind::velocity, k}; }
  static Symbol p(int k) { return {SymbolKind::momentum, k}; }

  std::string name() const;
  auto operator<=>(const Symbol&) const = default;
};

/// Which symbols the parser accepts. Lagrangians live on (t, q, qd);
/// observables live on phase space (t, q, p).
enum class Grammar { lagrangian, phase };

enum class Func : std::uint8_t { sin, cos, exp, log, sqrt };

enum class NodeKind : std::uint8_t {
  constant,
  symbol,
  sum,
  product,
  power,
  quotient,
  negation,
  function,
};

class Expr {
 public:
  /// The zero constant.
  Expr();

  static Expr constant(double value);
  static Expr symbol(Symbol s);

  // Raw constructors: build exactly the requested node, no simplification.
  static Expr raw_sum(Expr a, Expr b);
  static Expr raw_product(Expr a, Expr b);
  static Expr raw_quotient(Expr a, Expr b);
  static Expr raw_power(Expr base, Expr exponent);
  static Expr raw_negation(Expr a);
  static Expr raw_function(Func f, Expr a);

  NodeKind kind() const;
  double value() const;          // constant nodes
  Symbol symbol_value() const;   // symbol nodes
  Func func() const;             // function nodes
  std::span<const Expr> children() const;

  bool is_constant() const { return kind() == NodeKind::constant; }
  bool is_constant(double v) const { return is_constant() && value() == v; }

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Simplifying constructors: constant folding plus identity/annihilator
// absorption. Used by differentiate and by callers composing expressions.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, const Expr& exponent);
Expr apply(Func f, const Expr& a);

/// Syntax error with byte offset and the set of tokens that would have been
/// accepted there.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t offset, std::vector<std::string> expected,
             const std::string& message);
  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

Expr parse(std::string_view source, Grammar grammar = Grammar::lagrangian);

/// Fully parenthesized text; parse(to_string(e)) is structurally equal to e
/// for every tree produced by parse.
std::string to_string(const Expr& e);

Expr differentiate(const Expr& e, Symbol wrt);

std::set<Symbol> symbols_of(const Expr& e);

/// Rebuilds e with every symbol replaced by map(symbol). Structure is kept.
Expr relabel(const Expr& e, const std::function<Symbol(Symbol)>& map);

/// Numeric values for every symbol kind. Vectors are indexed by k-1.
struct Binding {
  double t = 0.0;
  std::vector<double> q;
  std::vector<double> qd;
  std::vector<double> p;
};

/// Evaluates with left-to-right child order. Throws Error{domain_error}
/// naming the offending subexpression, or dimension_mismatch for symbols
/// the binding does not cover.
double evaluate(const Expr& e, const Binding& at);

/// Flattened postfix form of an Expr for repeated evaluation. Produces the
/// same bits as evaluate() for the same tree.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);

  double operator()(double t, std::span<const double> q, std::span<const double> qd,
                    std::span<const double> p) const;
  double operator()(const Binding& b) const { return (*this)(b.t, b.q, b.qd, b.p); }

  const Expr& expr() const { return expr_; }
  bool is_zero() const { return expr_.is_constant(0.0); }

 private:
  enum class Op : std::uint8_t { push_const, push_sym, add, mul, div, pow, neg, fn };
  struct Instr {
    Op op;
    Func fn;
    SymbolKind sym_kind;
    int sym_index;
    double value;
    std::uint32_t node;  // index into nodes_ for error reporting
  };
  void emit(const Expr& e);

  Expr expr_;
  std::vector<Instr> code_;
  std::vector<Expr> nodes_;
  std::size_t max_depth_ = 0;
};

}  // namespace hamfold
