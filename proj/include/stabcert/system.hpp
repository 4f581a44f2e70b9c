#ifndef STABCERT_SYSTEM_HPP
#define STABCERT_SYSTEM_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "stabcert/expr.hpp"

namespace stabcert {

/// Raised when a system definition violates its invariants.
struct DefinitionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Constant-coefficient symplectic form on a global chart, stored as the
// antisymmetric matrix W with omega(u,v) = u^T W v. Canonical means
// [[0, I], [-I, 0]] in the declared variable order (q_1..q_n, p_1..p_n).
class SymplecticStructure {
 public:
  static SymplecticStructure canonical(int n);
  /// Validates antisymmetry (exact, as entered) and |det W| > 1e-12.
  static SymplecticStructure matrix(std::vector<std::vector<double>> w);

  bool is_canonical() const { return canonical_; }
  int dim() const { return static_cast<int>(w_.size()); }
  const std::vector<std::vector<double>>& w() const { return w_; }
  /// Rows of W^{-1}.
  const std::vector<std::vector<double>>& w_inverse() const { return w_inv_; }

 private:
  SymplecticStructure() = default;
  bool canonical_ = false;
  std::vector<std::vector<double>> w_;
  std::vector<std::vector<double>> w_inv_;
};

struct HamiltonianDynamics {
  Expr hamiltonian;
  SymplecticStructure symplectic;
};

struct ExplicitField {
  std::vector<Expr> components;
};

struct NamedExpr {
  std::string name;
  Expr expr;
};

// A dynamical system on R^d with optional circle dimensions
// (circumference 2*pi). Immutable after construction.
class SystemDef {
 public:
  SystemDef(std::string name, std::vector<std::string> variables,
            std::vector<bool> periodic,
            std::variant<HamiltonianDynamics, ExplicitField> dynamics,
            std::vector<NamedExpr> conserved_candidates = {},
            std::map<std::string, double> parameters = {});

  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(variables_.size()); }
  const std::vector<std::string>& variables() const { return variables_; }
  const std::vector<bool>& periodic() const { return periodic_; }
  bool any_periodic() const;
  bool is_hamiltonian() const;
  const HamiltonianDynamics& hamiltonian() const;
  const std::vector<NamedExpr>& conserved_candidates() const { return conserved_; }
  const std::map<std::string, double>& parameters() const { return parameters_; }

  /// Field components as expressions (derived from H for Hamiltonian dynamics).
  const std::vector<Expr>& field() const { return field_; }
  const std::vector<CompiledExpr>& field_compiled() const { return field_compiled_; }

  /// Evaluate the vector field at x; periodic coordinates are reduced
  /// mod 2*pi before evaluation. Expression domain errors propagate with
  /// the state attached to the message.
  std::vector<double> field_at(std::span<const double> x) const;

  /// Reduce periodic coordinates of x into [-pi, pi).
  std::vector<double> wrap(std::span<const double> x) const;

  /// Euclidean distance with wrapped differences min(|d|, 2*pi - |d|)
  /// on periodic dimensions.
  double distance(std::span<const double> a, std::span<const double> b) const;

  /// Euclidean norm over the non-periodic dimensions only (circle
  /// coordinates are compact and cannot escape).
  double escape_norm(std::span<const double> x) const;

  CompiledExpr compile(const Expr& e) const;

 private:
  std::string name_;
  std::vector<std::string> variables_;
  std::vector<bool> periodic_;
  std::variant<HamiltonianDynamics, ExplicitField> dynamics_;
  std::vector<NamedExpr> conserved_;
  std::map<std::string, double> parameters_;
  std::vector<Expr> field_;
  std::vector<CompiledExpr> field_compiled_;
};

/// Components of the Hamiltonian vector field X_H defined by i_{X_H} omega = dH.
/// In canonical coordinates (q, p) this is (dH/dp, -dH/dq).
std::vector<Expr> hamiltonian_field(const Expr& h, const SymplecticStructure& s,
                                    std::span<const std::string> variables);

}  // namespace stabcert

#endif  // STABCERT_SYSTEM_HPP
