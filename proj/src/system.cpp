#include "stabcert/system.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace stabcert {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double x) {
  // reduce to [-pi, pi)
  double y = std::remainder(x, kTwoPi);
  if (y >= std::numbers::pi) y -= kTwoPi;
  return y;
}

}  // namespace

SymplecticStructure SymplecticStructure::canonical(int n) {
  if (n <= 0) throw DefinitionError("canonical structure needs n >= 1");
  SymplecticStructure s;
  s.canonical_ = true;
  int d = 2 * n;
  s.w_.assign(d, std::vector<double>(d, 0.0));
  s.w_inv_.assign(d, std::vector<double>(d, 0.0));
  for (int i = 0; i < n; ++i) {
    s.w_[i][n + i] = 1.0;
    s.w_[n + i][i] = -1.0;
    // W^2 = -I for the canonical block matrix, so W^{-1} = -W
    s.w_inv_[i][n + i] = -1.0;
    s.w_inv_[n + i][i] = 1.0;
  }
  return s;
}

SymplecticStructure SymplecticStructure::matrix(std::vector<std::vector<double>> w) {
  int d = static_cast<int>(w.size());
  if (d == 0) throw DefinitionError("symplectic matrix is empty");
  for (const auto& row : w)
    if (static_cast<int>(row.size()) != d)
      throw DefinitionError("symplectic matrix is not square");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (w[i][j] + w[j][i] != 0.0)
        throw DefinitionError("symplectic matrix is not antisymmetric");

  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = w[i][j];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (std::abs(lu.determinant()) <= 1e-12)
    throw DefinitionError("symplectic matrix is numerically singular");
  Eigen::MatrixXd inv = lu.inverse();

  SymplecticStructure s;
  s.w_ = std::move(w);
  s.w_inv_.assign(d, std::vector<double>(d, 0.0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s.w_inv_[i][j] = inv(i, j);
  return s;
}

std::vector<Expr> hamiltonian_field(const Expr& h, const SymplecticStructure& s,
                                    std::span<const std::string> variables) {
  int d = s.dim();
  if (static_cast<int>(variables.size()) != d)
    throw DefinitionError("variable count does not match symplectic dimension");
  std::vector<Expr> grad;
  grad.reserve(variables.size());
  for (const auto& v : variables) grad.push_back(h.diff(v));
  // i_X omega = dH with omega(u,v) = u^T W v gives X = -W^{-1} grad H,
  // which reproduces (dH/dp, -dH/dq) for the canonical W.
  std::vector<Expr> field;
  field.reserve(variables.size());
  const auto& winv = s.w_inverse();
  for (int i = 0; i < d; ++i) {
    Expr xi = Expr::constant(0.0);
    for (int j = 0; j < d; ++j) {
      double c = -winv[i][j];
      if (c != 0.0) xi = xi + Expr::constant(c) * grad[j];
    }
    field.push_back(xi);
  }
  return field;
}

SystemDef::SystemDef(std::string name, std::vector<std::string> variables,
                     std::vector<bool> periodic,
                     std::variant<HamiltonianDynamics, ExplicitField> dynamics,
                     std::vector<NamedExpr> conserved_candidates,
                     std::map<std::string, double> parameters)
    : name_(std::move(name)),
      variables_(std::move(variables)),
      periodic_(std::move(periodic)),
      dynamics_(std::move(dynamics)),
      conserved_(std::move(conserved_candidates)),
      parameters_(std::move(parameters)) {
  int d = dim();
  if (d <= 0) throw DefinitionError("system dimension must be positive");
  if (static_cast<int>(periodic_.size()) != d)
    throw DefinitionError("periodic flags must match dimension");
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (variables_[i] == variables_[j])
        throw DefinitionError("duplicate variable name '" + variables_[i] + "'");

  auto check_vars = [&](const Expr& e, const std::string& what) {
    for (const auto& v : e.variables()) {
      bool declared = std::find(variables_.begin(), variables_.end(), v) != variables_.end() ||
                      parameters_.count(v) > 0;
      if (!declared)
        throw DefinitionError(what + " references undeclared name '" + v + "'");
    }
  };

  if (auto* ham = std::get_if<HamiltonianDynamics>(&dynamics_)) {
    if (d % 2 != 0)
      throw DefinitionError("Hamiltonian dynamics requires even dimension");
    if (ham->symplectic.dim() != d)
      throw DefinitionError("symplectic structure dimension mismatch");
    check_vars(ham->hamiltonian, "Hamiltonian");
    field_ = hamiltonian_field(ham->hamiltonian, ham->symplectic, variables_);
  } else {
    auto& f = std::get<ExplicitField>(dynamics_);
    if (static_cast<int>(f.components.size()) != d)
      throw DefinitionError("field component count must match dimension");
    for (const auto& c : f.components) check_vars(c, "field component");
    field_ = f.components;
  }
  for (const auto& q : conserved_) check_vars(q.expr, "conserved candidate '" + q.name + "'");
  field_compiled_ = compile_all(field_, variables_, parameters_);
}

bool SystemDef::any_periodic() const {
  for (bool p : periodic_)
    if (p) return true;
  return false;
}

bool SystemDef::is_hamiltonian() const {
  return std::holds_alternative<HamiltonianDynamics>(dynamics_);
}

const HamiltonianDynamics& SystemDef::hamiltonian() const {
  if (!is_hamiltonian())
    throw DefinitionError("system '" + name_ + "' has no Hamiltonian dynamics");
  return std::get<HamiltonianDynamics>(dynamics_);
}

std::vector<double> SystemDef::wrap(std::span<const double> x) const {
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t i = 0; i < y.size(); ++i)
    if (periodic_[i]) y[i] = wrap_angle(y[i]);
  return y;
}

std::vector<double> SystemDef::field_at(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim())
    throw DefinitionError("state dimension mismatch in field_at");
  std::vector<double> xw = wrap(x);
  std::vector<double> out(xw.size());
  try {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = field_compiled_[i].eval(xw);
  } catch (const EvalError& e) {
    std::ostringstream os;
    os << e.what() << " at state (";
    for (std::size_t i = 0; i < xw.size(); ++i)
      os << (i ? ", " : "") << xw[i];
    os << ")";
    throw EvalError(os.str(), e.subexpr);
  }
  return out;
}

double SystemDef::distance(std::span<const double> a, std::span<const double> b) const {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (periodic_[i]) {
      d = std::abs(wrap_angle(d));
      d = std::min(d, kTwoPi - d);
    }
    s += d * d;
  }
  return std::sqrt(s);
}

double SystemDef::escape_norm(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!periodic_[i]) s += x[i] * x[i];
  return std::sqrt(s);
}

CompiledExpr SystemDef::compile(const Expr& e) const {
  return CompiledExpr(e, variables_, parameters_);
}

}  // namespace stabcert
