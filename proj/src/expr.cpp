#include "stabcert/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>

namespace stabcert {

struct Expr::Node {
  Kind kind;
  double value = 0.0;                             // Constant
  std::string name;                               // Variable
  std::shared_ptr<const Node> a, b;               // children

  Node(Kind k, double v) : kind(k), value(v) {}
  Node(Kind k, std::string n) : kind(k), name(std::move(n)) {}
  Node(Kind k, std::shared_ptr<const Node> x, std::shared_ptr<const Node> y = nullptr)
      : kind(k), a(std::move(x)), b(std::move(y)) {}
};

namespace {

using Kind = Expr::Kind;
using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_const(double v) { return std::make_shared<Expr::Node>(Kind::Constant, v); }

bool is_const(const NodePtr& n, double v) {
  return n->kind == Kind::Constant && n->value == v;
}

double apply_unary(Kind k, double x, const char** err) {
  switch (k) {
    case Kind::Neg:  return -x;
    case Kind::Sin:  return std::sin(x);
    case Kind::Cos:  return std::cos(x);
    case Kind::Tan:  return std::tan(x);
    case Kind::Exp:  return std::exp(x);
    case Kind::Abs:  return std::abs(x);
    case Kind::Log:
      if (x <= 0.0) { *err = "log of non-positive value"; return 0.0; }
      return std::log(x);
    case Kind::Sqrt:
      if (x < 0.0) { *err = "sqrt of negative value"; return 0.0; }
      return std::sqrt(x);
    default: *err = "not a unary operation"; return 0.0;
  }
}

bool is_small_int_exponent(double y) {
  return y == std::floor(y) && std::abs(y) <= 6.0 && y != 0.0;
}

// Small integer powers use repeated multiplication so the tree walker,
// the compiled program, and constant folding agree bit for bit.
double pow_small_int(double x, int n) {
  double p = 1.0;
  int m = n < 0 ? -n : n;
  for (int i = 0; i < m; ++i) p *= x;
  return n < 0 ? 1.0 / p : p;
}

double apply_binary(Kind k, double x, double y, const char** err) {
  switch (k) {
    case Kind::Add: return x + y;
    case Kind::Sub: return x - y;
    case Kind::Mul: return x * y;
    case Kind::Div:
      if (y == 0.0) { *err = "division by zero"; return 0.0; }
      return x / y;
    case Kind::Pow: {
      if (x == 0.0 && y < 0.0) { *err = "zero raised to negative power"; return 0.0; }
      if (x < 0.0 && y != std::floor(y)) {
        *err = "negative base with non-integer exponent";
        return 0.0;
      }
      if (is_small_int_exponent(y)) return pow_small_int(x, static_cast<int>(y));
      return std::pow(x, y);
    }
    default: *err = "not a binary operation"; return 0.0;
  }
}

// Smart constructors: fold constants and strip arithmetic identities so
// derivative trees stay compact. Folding is skipped when it would raise
// a domain error; eval reports it instead.
NodePtr make_unary(Kind k, NodePtr a) {
  if (a->kind == Kind::Constant) {
    const char* err = nullptr;
    double v = apply_unary(k, a->value, &err);
    if (!err && std::isfinite(v)) return make_const(v);
  }
  if (k == Kind::Neg && a->kind == Kind::Neg) return a->a;
  return std::make_shared<Expr::Node>(k, std::move(a));
}

NodePtr make_binary(Kind k, NodePtr a, NodePtr b) {
  if (a->kind == Kind::Constant && b->kind == Kind::Constant) {
    const char* err = nullptr;
    double v = apply_binary(k, a->value, b->value, &err);
    if (!err && std::isfinite(v)) return make_const(v);
  }
  switch (k) {
    case Kind::Add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Kind::Sub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make_unary(Kind::Neg, std::move(b));
      break;
    case Kind::Mul:
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      break;
    case Kind::Div:
      if (is_const(b, 1.0)) return a;
      break;
    case Kind::Pow:
      if (is_const(b, 1.0)) return a;
      if (is_const(b, 0.0)) return make_const(1.0);
      if (is_const(a, 1.0)) return make_const(1.0);
      break;
    default:
      break;
  }
  return std::make_shared<Expr::Node>(k, std::move(a), std::move(b));
}

std::string render_node(const Expr::Node& n);

int precedence(Kind k) {
  switch (k) {
    case Kind::Add: case Kind::Sub: return 1;
    case Kind::Mul: case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    default: return 5;
  }
}

std::string render_double(double v) {
  std::array<char, 32> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

std::string render_child(const Expr::Node& child, int min_prec) {
  std::string s = render_node(child);
  if (precedence(child.kind) < min_prec) return "(" + s + ")";
  return s;
}

const char* function_name(Kind k) {
  switch (k) {
    case Kind::Sin: return "sin";
    case Kind::Cos: return "cos";
    case Kind::Tan: return "tan";
    case Kind::Exp: return "exp";
    case Kind::Log: return "log";
    case Kind::Sqrt: return "sqrt";
    case Kind::Abs: return "abs";
    default: return nullptr;
  }
}

std::string render_node(const Expr::Node& n) {
  switch (n.kind) {
    case Kind::Constant: return render_double(n.value);
    case Kind::Variable: return n.name;
    case Kind::Neg: return "-" + render_child(*n.a, 3);
    case Kind::Add: return render_child(*n.a, 1) + " + " + render_child(*n.b, 2);
    case Kind::Sub: return render_child(*n.a, 1) + " - " + render_child(*n.b, 2);
    case Kind::Mul: return render_child(*n.a, 2) + "*" + render_child(*n.b, 3);
    case Kind::Div: return render_child(*n.a, 2) + "/" + render_child(*n.b, 3);
    case Kind::Pow:
      // right-associative: parenthesize a Pow left child, keep it on the right
      return render_child(*n.a, 5) + "^" + render_child(*n.b, 3);
    default:
      return std::string(function_name(n.kind)) + "(" + render_node(*n.a) + ")";
  }
}

double eval_node(const Expr::Node& n, const Bindings& b) {
  switch (n.kind) {
    case Kind::Constant:
      return n.value;
    case Kind::Variable: {
      auto it = b.find(n.name);
      if (it == b.end())
        throw EvalError("unbound variable '" + n.name + "'", n.name);
      return it->second;
    }
    case Kind::Add: case Kind::Sub: case Kind::Mul: case Kind::Div: case Kind::Pow: {
      double x = eval_node(*n.a, b);
      double y = eval_node(*n.b, b);
      const char* err = nullptr;
      double v = apply_binary(n.kind, x, y, &err);
      if (err) throw EvalError(err, render_node(n));
      if (std::isnan(v)) throw EvalError("result is NaN", render_node(n));
      return v;
    }
    default: {
      double x = eval_node(*n.a, b);
      const char* err = nullptr;
      double v = apply_unary(n.kind, x, &err);
      if (err) throw EvalError(err, render_node(n));
      if (std::isnan(v)) throw EvalError("result is NaN", render_node(n));
      return v;
    }
  }
}

NodePtr diff_node(const NodePtr& n, std::string_view var);

bool node_depends_on(const Expr::Node& n, std::string_view var) {
  switch (n.kind) {
    case Kind::Constant: return false;
    case Kind::Variable: return n.name == var;
    default:
      if (n.a && node_depends_on(*n.a, var)) return true;
      return n.b && node_depends_on(*n.b, var);
  }
}

NodePtr diff_node(const NodePtr& n, std::string_view var) {
  if (!node_depends_on(*n, var)) return make_const(0.0);
  switch (n->kind) {
    case Kind::Variable:
      return make_const(1.0);
    case Kind::Neg:
      return make_unary(Kind::Neg, diff_node(n->a, var));
    case Kind::Add:
      return make_binary(Kind::Add, diff_node(n->a, var), diff_node(n->b, var));
    case Kind::Sub:
      return make_binary(Kind::Sub, diff_node(n->a, var), diff_node(n->b, var));
    case Kind::Mul:
      return make_binary(Kind::Add,
                         make_binary(Kind::Mul, diff_node(n->a, var), n->b),
                         make_binary(Kind::Mul, n->a, diff_node(n->b, var)));
    case Kind::Div:
      // (u'v - uv') / v^2
      return make_binary(
          Kind::Div,
          make_binary(Kind::Sub,
                      make_binary(Kind::Mul, diff_node(n->a, var), n->b),
                      make_binary(Kind::Mul, n->a, diff_node(n->b, var))),
          make_binary(Kind::Pow, n->b, make_const(2.0)));
    case Kind::Pow: {
      if (n->b->kind == Kind::Constant) {
        // c * u^(c-1) * u'
        double c = n->b->value;
        return make_binary(
            Kind::Mul, make_const(c),
            make_binary(Kind::Mul,
                        make_binary(Kind::Pow, n->a, make_const(c - 1.0)),
                        diff_node(n->a, var)));
      }
      // u^v * (v' log u + v u'/u)
      return make_binary(
          Kind::Mul, std::make_shared<Expr::Node>(Kind::Pow, n->a, n->b),
          make_binary(
              Kind::Add,
              make_binary(Kind::Mul, diff_node(n->b, var),
                          make_unary(Kind::Log, n->a)),
              make_binary(Kind::Mul, n->b,
                          make_binary(Kind::Div, diff_node(n->a, var), n->a))));
    }
    case Kind::Sin:
      return make_binary(Kind::Mul, make_unary(Kind::Cos, n->a), diff_node(n->a, var));
    case Kind::Cos:
      return make_unary(Kind::Neg, make_binary(Kind::Mul, make_unary(Kind::Sin, n->a),
                                               diff_node(n->a, var)));
    case Kind::Tan:
      return make_binary(
          Kind::Div, diff_node(n->a, var),
          make_binary(Kind::Pow, make_unary(Kind::Cos, n->a), make_const(2.0)));
    case Kind::Exp:
      return make_binary(Kind::Mul, make_unary(Kind::Exp, n->a), diff_node(n->a, var));
    case Kind::Log:
      return make_binary(Kind::Div, diff_node(n->a, var), n->a);
    case Kind::Sqrt:
      return make_binary(
          Kind::Div, diff_node(n->a, var),
          make_binary(Kind::Mul, make_const(2.0), make_unary(Kind::Sqrt, n->a)));
    case Kind::Abs:
      // u/|u| * u'; not differentiable at u = 0, eval reports it there
      return make_binary(Kind::Mul,
                         make_binary(Kind::Div, n->a, make_unary(Kind::Abs, n->a)),
                         diff_node(n->a, var));
    default:
      return make_const(0.0);
  }
}

// --- parser ---------------------------------------------------------------
//
// expression := term (('+'|'-') term)*
// term       := unary (('*'|'/') unary)*
// unary      := ('-'|'+') unary | power
// power      := atom ('^' unary)?
// atom       := number | identifier | identifier '(' expression ')'
//             | '(' expression ')'

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr run() {
    if (text_.empty()) throw ParseError("empty expression", 0);
    NodePtr e = expression();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("unexpected character '" + std::string(1, text_[pos_]) + "'", pos_);
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) { ++pos_; return true; }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      if (eat('+')) lhs = make_binary(Kind::Add, lhs, term());
      else if (eat('-')) lhs = make_binary(Kind::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (eat('*')) lhs = make_binary(Kind::Mul, lhs, unary());
      else if (eat('/')) lhs = make_binary(Kind::Div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make_unary(Kind::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (eat('^')) return make_binary(Kind::Pow, base, unary());
    return base;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("expected operand", pos_);
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expression();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError("expected operand", pos_);
  }

  NodePtr number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        pos_ = mark;  // 'e' belongs to something else, e.g. "2e" is an error later
      } else {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || p != text_.data() + pos_)
      throw ParseError("malformed number", start);
    return make_const(v);
  }

  NodePtr identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (peek() == '(') {
      static const std::map<std::string, Kind, std::less<>> kFunctions = {
          {"sin", Kind::Sin}, {"cos", Kind::Cos},   {"tan", Kind::Tan},
          {"exp", Kind::Exp}, {"log", Kind::Log},   {"sqrt", Kind::Sqrt},
          {"abs", Kind::Abs},
      };
      auto it = kFunctions.find(name);
      if (it == kFunctions.end())
        throw ParseError("unknown function '" + name + "'", start);
      eat('(');
      NodePtr arg = expression();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return make_unary(it->second, arg);
    }
    if (name == "pi") return make_const(std::numbers::pi);
    return std::make_shared<Expr::Node>(Kind::Variable, std::move(name));
  }
};

}  // namespace

Expr Expr::constant(double value) { return Expr(make_const(value)); }

Expr Expr::variable(std::string name) {
  return Expr(std::make_shared<Node>(Kind::Variable, std::move(name)));
}

Expr Expr::parse(std::string_view text) { return Expr(Parser(text).run()); }

double Expr::eval(const Bindings& bindings) const { return eval_node(*node_, bindings); }

Expr Expr::diff(std::string_view var) const { return Expr(diff_node(node_, var)); }

std::string Expr::render() const { return render_node(*node_); }

Expr::Kind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }

std::size_t Expr::arity() const {
  if (node_->b) return 2;
  return node_->a ? 1 : 0;
}

Expr Expr::child(std::size_t i) const { return Expr(i == 0 ? node_->a : node_->b); }

bool Expr::depends_on(std::string_view var) const {
  return node_depends_on(*node_, var);
}

namespace {
void collect_vars(const Expr::Node& n, std::set<std::string>& out) {
  if (n.kind == Kind::Variable) out.insert(n.name);
  if (n.a) collect_vars(*n.a, out);
  if (n.b) collect_vars(*n.b, out);
}
}  // namespace

std::set<std::string> Expr::variables() const {
  std::set<std::string> out;
  collect_vars(*node_, out);
  return out;
}

Expr operator+(const Expr& a, const Expr& b) { return Expr(make_binary(Kind::Add, a.node_, b.node_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(make_binary(Kind::Sub, a.node_, b.node_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(make_binary(Kind::Mul, a.node_, b.node_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(make_binary(Kind::Div, a.node_, b.node_)); }
Expr operator-(const Expr& a) { return Expr(make_unary(Kind::Neg, a.node_)); }

Expr Expr::pow(const Expr& exponent) const {
  return Expr(make_binary(Kind::Pow, node_, exponent.node_));
}
Expr Expr::pow(double exponent) const { return pow(constant(exponent)); }

Expr Expr::sin(const Expr& a) { return Expr(make_unary(Kind::Sin, a.node_)); }
Expr Expr::cos(const Expr& a) { return Expr(make_unary(Kind::Cos, a.node_)); }
Expr Expr::tan(const Expr& a) { return Expr(make_unary(Kind::Tan, a.node_)); }
Expr Expr::exp(const Expr& a) { return Expr(make_unary(Kind::Exp, a.node_)); }
Expr Expr::log(const Expr& a) { return Expr(make_unary(Kind::Log, a.node_)); }
Expr Expr::sqrt(const Expr& a) { return Expr(make_unary(Kind::Sqrt, a.node_)); }
Expr Expr::abs(const Expr& a) { return Expr(make_unary(Kind::Abs, a.node_)); }

// --- compilation ------------------------------------------------------------

CompiledExpr::CompiledExpr(const Expr& e, std::span<const std::string> variables,
                           const std::map<std::string, double>& parameters)
    : source_(e) {
  // post-order emit
  int depth = 0, max_depth = 0;
  auto emit = [&](Instr in, int pushes) {
    code_.push_back(in);
    depth += pushes;
    max_depth = std::max(max_depth, depth);
  };
  std::vector<std::pair<const Expr::Node*, bool>> stack{{e.node_.get(), false}};
  while (!stack.empty()) {
    auto [n, done] = stack.back();
    stack.pop_back();
    if (!done) {
      if (n->kind == Kind::Constant) {
        emit({Op::PushConst, 0, n->value}, 1);
        continue;
      }
      if (n->kind == Kind::Variable) {
        auto it = std::find(variables.begin(), variables.end(), n->name);
        if (it != variables.end()) {
          emit({Op::PushVar, static_cast<int>(it - variables.begin()), 0.0}, 1);
        } else if (auto p = parameters.find(n->name); p != parameters.end()) {
          emit({Op::PushConst, 0, p->second}, 1);
        } else {
          throw EvalError("unbound variable '" + n->name + "'", n->name);
        }
        continue;
      }
      stack.push_back({n, true});
      if (n->b) stack.push_back({n->b.get(), false});
      if (n->a) stack.push_back({n->a.get(), false});
      continue;
    }
    switch (n->kind) {
      case Kind::Neg:  emit({Op::Neg}, 0); break;
      case Kind::Add:  emit({Op::Add}, -1); break;
      case Kind::Sub:  emit({Op::Sub}, -1); break;
      case Kind::Mul:  emit({Op::Mul}, -1); break;
      case Kind::Div:  emit({Op::Div}, -1); break;
      case Kind::Pow: {
        // integer exponents up to |6| skip std::pow
        if (n->b->kind == Kind::Constant && is_small_int_exponent(n->b->value)) {
          code_.pop_back();  // drop the exponent constant emitted just before
          --depth;
          emit({Op::PowInt, static_cast<int>(n->b->value), 0.0}, 0);
        } else {
          emit({Op::Pow}, -1);
        }
        break;
      }
      case Kind::Sin:  emit({Op::Sin}, 0); break;
      case Kind::Cos:  emit({Op::Cos}, 0); break;
      case Kind::Tan:  emit({Op::Tan}, 0); break;
      case Kind::Exp:  emit({Op::Exp}, 0); break;
      case Kind::Log:  emit({Op::Log}, 0); break;
      case Kind::Sqrt: emit({Op::Sqrt}, 0); break;
      case Kind::Abs:  emit({Op::Abs}, 0); break;
      default: break;
    }
  }
  stack_need_ = static_cast<std::size_t>(max_depth);
  if (stack_need_ > 200)
    throw std::length_error("expression too deep to compile");
}

double CompiledExpr::eval(std::span<const double> values) const {
  double st[208];
  std::size_t top = 0;
  const char* err = nullptr;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::PushConst: st[top++] = in.c; break;
      case Op::PushVar:   st[top++] = values[static_cast<std::size_t>(in.slot)]; break;
      case Op::Neg: st[top - 1] = -st[top - 1]; break;
      case Op::Add: st[top - 2] += st[top - 1]; --top; break;
      case Op::Sub: st[top - 2] -= st[top - 1]; --top; break;
      case Op::Mul: st[top - 2] *= st[top - 1]; --top; break;
      case Op::Div:
        if (st[top - 1] == 0.0) { err = "division by zero"; break; }
        st[top - 2] /= st[top - 1]; --top; break;
      case Op::Pow: {
        double x = st[top - 2], y = st[top - 1];
        double v = apply_binary(Kind::Pow, x, y, &err);
        st[top - 2] = v; --top; break;
      }
      case Op::PowInt: {
        double x = st[top - 1];
        int n = in.slot;
        if (x == 0.0 && n < 0) { err = "zero raised to negative power"; break; }
        st[top - 1] = pow_small_int(x, n);
        break;
      }
      case Op::Sin: st[top - 1] = std::sin(st[top - 1]); break;
      case Op::Cos: st[top - 1] = std::cos(st[top - 1]); break;
      case Op::Tan: st[top - 1] = std::tan(st[top - 1]); break;
      case Op::Exp: st[top - 1] = std::exp(st[top - 1]); break;
      case Op::Log:
        if (st[top - 1] <= 0.0) { err = "log of non-positive value"; break; }
        st[top - 1] = std::log(st[top - 1]); break;
      case Op::Sqrt:
        if (st[top - 1] < 0.0) { err = "sqrt of negative value"; break; }
        st[top - 1] = std::sqrt(st[top - 1]); break;
      case Op::Abs: st[top - 1] = std::abs(st[top - 1]); break;
    }
    if (err) throw EvalError(err, source_.render());
  }
  double v = st[0];
  if (std::isnan(v)) throw EvalError("result is NaN", source_.render());
  return v;
}

std::vector<CompiledExpr> compile_all(std::span<const Expr> exprs,
                                      std::span<const std::string> variables,
                                      const std::map<std::string, double>& parameters) {
  std::vector<CompiledExpr> out;
  out.reserve(exprs.size());
  for (const Expr& e : exprs) out.emplace_back(e, variables, parameters);
  return out;
}

}  // namespace stabcert
