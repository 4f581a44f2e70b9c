#ifndef STABCERT_EXPR_HPP
#define STABCERT_EXPR_HPP

#include <map>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stabcert {

/// Name -> value environment for expression evaluation.
using Bindings = std::map<std::string, double, std::less<>>;

/// Thrown by Expr::parse. `offset` is the byte position in the input text.
struct ParseError : std::runtime_error {
  ParseError(std::string msg, std::size_t off)
      : std::runtime_error(std::move(msg)), offset(off) {}
  std::size_t offset = 0;
};

/// Thrown on evaluation failure: unbound variable or a domain error
/// (log of non-positive, sqrt of negative, division by zero, non-finite
/// intermediate). `subexpr` is the rendered offending subexpression.
struct EvalError : std::runtime_error {
  EvalError(std::string msg, std::string sub)
      : std::runtime_error(std::move(msg)), subexpr(std::move(sub)) {}
  std::string subexpr;
};

// Immutable scalar expression tree over named variables.
//
// Supported nodes: real constants, variables, unary minus, the binary
// operators + - * / ^ (^ right-associative, binds tightest), and the
// functions sin, cos, tan, exp, log, sqrt, abs. The constant `pi` is
// predefined. There is no implicit multiplication.
class Expr {
 public:
  enum class Kind {
    Constant, Variable, Neg,
    Add, Sub, Mul, Div, Pow,
    Sin, Cos, Tan, Exp, Log, Sqrt, Abs,
  };

  Expr() : Expr(constant(0.0)) {}

  static Expr constant(double value);
  static Expr variable(std::string name);

  /// Parse an expression from text. Throws ParseError on bad syntax or
  /// unknown function names.
  static Expr parse(std::string_view text);

  /// Evaluate with all variables bound. Throws EvalError on unbound
  /// variables and domain errors; never returns NaN.
  double eval(const Bindings& bindings) const;

  /// Exact symbolic partial derivative with respect to `var`.
  Expr diff(std::string_view var) const;

  /// Render to text that parses back to an evaluation-equivalent tree.
  std::string render() const;

  Kind kind() const;
  /// Constant value (Constant nodes only).
  double value() const;
  /// Variable name (Variable nodes only).
  const std::string& name() const;
  std::size_t arity() const;
  Expr child(std::size_t i) const;

  bool depends_on(std::string_view var) const;
  /// All variable names appearing in the tree.
  std::set<std::string> variables() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  Expr pow(const Expr& exponent) const;
  Expr pow(double exponent) const;

  static Expr sin(const Expr& a);
  static Expr cos(const Expr& a);
  static Expr tan(const Expr& a);
  static Expr exp(const Expr& a);
  static Expr log(const Expr& a);
  static Expr sqrt(const Expr& a);
  static Expr abs(const Expr& a);

  struct Node;

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
  friend class CompiledExpr;
};

// Expression flattened to a postfix program against a fixed variable
// order, with parameters folded in as constants. This is the hot path
// used by integrators and grid sweeps; Expr::eval stays the reference.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expr& e, std::span<const std::string> variables,
               const std::map<std::string, double>& parameters = {});

  /// Evaluate against values aligned with the compile-time variable order.
  /// Same domain-error behavior as Expr::eval.
  double eval(std::span<const double> values) const;

  const Expr& source() const { return source_; }
  bool empty() const { return code_.empty(); }

 private:
  enum class Op : std::uint8_t {
    PushConst, PushVar, Neg, Add, Sub, Mul, Div, Pow, PowInt,
    Sin, Cos, Tan, Exp, Log, Sqrt, Abs,
  };
  struct Instr {
    Op op;
    int slot = 0;    // PushVar: value index; PowInt: integer exponent
    double c = 0.0;  // PushConst payload
  };
  std::vector<Instr> code_;
  std::size_t stack_need_ = 0;
  Expr source_;
};

/// Compile one expression per component against a shared variable order.
std::vector<CompiledExpr> compile_all(
    std::span<const Expr> exprs, std::span<const std::string> variables,
    const std::map<std::string, double>& parameters = {});

}  // namespace stabcert

#endif  // STABCERT_EXPR_HPP
