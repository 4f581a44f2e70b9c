#ifndef STABCERT_CONSERVED_HPP
#define STABCERT_CONSERVED_HPP

#include <span>
#include <string>
#include <vector>

#include "stabcert/integrate.hpp"
#include "stabcert/system.hpp"

namespace stabcert {

struct ResidualReport {
  double max_residual = 0.0;        // max |X(Q)| over the sample set
  std::vector<double> worst_point;
  double max_scale = 0.0;           // max |grad Q| |X|, for scaled tolerances
  std::size_t samples_evaluated = 0;
  std::size_t samples_skipped = 0;  // points where an expression domain error hit
};

/// Max |X(Q)| = |grad Q . X| over the sample points, using symbolic
/// derivatives. Skipped points are counted, not fatal.
ResidualReport conservation_residual(const SystemDef& sys, const Expr& q,
                                     std::span<const std::vector<double>> points);

struct DriftReport {
  double max_abs = 0.0;     // max |Q(x(t)) - Q(x0)|
  double relative = 0.0;    // max_abs / (1 + |Q(x0)|)
  double initial_value = 0.0;
};

/// Drift of Q along a trajectory's samples.
DriftReport drift(const SystemDef& sys, const Expr& q, const Trajectory& traj);

/// Symbolic Poisson bracket {F,G} for the given structure, with the sign
/// fixed so that {q,p} = +1 in canonical coordinates.
Expr poisson_bracket_expr(const Expr& f, const Expr& g, const SymplecticStructure& s,
                          std::span<const std::string> variables);

/// {F,G}(x). Convenience wrapper over poisson_bracket_expr.
double poisson_bracket(const Expr& f, const Expr& g, const SymplecticStructure& s,
                       std::span<const std::string> variables,
                       std::span<const double> x,
                       const std::map<std::string, double>& parameters = {});

struct BracketReport {
  std::size_t i = 0, j = 0;
  std::string name_i, name_j;
  double max_abs = 0.0;
  std::vector<double> worst_point;
  double max_scale = 0.0;           // max |grad Qi| |grad Qj| over samples
  std::size_t samples = 0;
  double tolerance = 0.0;           // rtol * (1 + max_scale)
  bool pass = false;
};

/// Pairwise involution check over a sample set: pass when
/// max |{Qi,Qj}| <= rtol * (1 + max |grad Qi||grad Qj|).
std::vector<BracketReport> involution_report(
    const SystemDef& sys, std::span<const NamedExpr> qs,
    std::span<const std::vector<double>> points, double rtol = 1e-8);

/// Numerical rank of the Jacobian [dQi/dxj] at x: count of singular values
/// sigma >= rank_rtol * sigma_max; rank 0 when sigma_max < floor.
int independence_rank(std::span<const Expr> qs, std::span<const std::string> variables,
                      const std::map<std::string, double>& parameters,
                      std::span<const double> x, double rank_rtol = 1e-8,
                      double floor = 1e-12);

int independence_rank(const SystemDef& sys, std::span<const NamedExpr> qs,
                      std::span<const double> x, double rank_rtol = 1e-8,
                      double floor = 1e-12);

}  // namespace stabcert

#endif  // STABCERT_CONSERVED_HPP
