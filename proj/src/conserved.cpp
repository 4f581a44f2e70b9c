#include "stabcert/conserved.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

namespace stabcert {

namespace {

std::vector<CompiledExpr> compile_gradient(const SystemDef& sys, const Expr& q) {
  std::vector<Expr> grad;
  grad.reserve(sys.variables().size());
  for (const auto& v : sys.variables()) grad.push_back(q.diff(v));
  return compile_all(grad, sys.variables(), sys.parameters());
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

ResidualReport conservation_residual(const SystemDef& sys, const Expr& q,
                                     std::span<const std::vector<double>> points) {
  ResidualReport rep;
  auto grad = compile_gradient(sys, q);
  const auto& field = sys.field_compiled();
  std::vector<double> g(sys.dim()), f(sys.dim());
  for (const auto& p : points) {
    std::vector<double> x = sys.wrap(p);
    double resid = 0.0, gn = 0.0, fn = 0.0;
    try {
      for (int i = 0; i < sys.dim(); ++i) {
        g[i] = grad[i].eval(x);
        f[i] = field[i].eval(x);
      }
      for (int i = 0; i < sys.dim(); ++i) resid += g[i] * f[i];
      gn = norm2(g);
      fn = norm2(f);
    } catch (const EvalError&) {
      ++rep.samples_skipped;
      continue;
    }
    ++rep.samples_evaluated;
    rep.max_scale = std::max(rep.max_scale, gn * fn);
    if (std::abs(resid) >= rep.max_residual) {
      rep.max_residual = std::abs(resid);
      rep.worst_point = p;
    }
  }
  return rep;
}

DriftReport drift(const SystemDef& sys, const Expr& q, const Trajectory& traj) {
  CompiledExpr c = sys.compile(q);
  DriftReport rep;
  if (traj.states.empty()) return rep;
  std::vector<double> x0 = sys.wrap(traj.states.front());
  rep.initial_value = c.eval(x0);
  for (const auto& s : traj.states) {
    std::vector<double> x = sys.wrap(s);
    double v = c.eval(x);
    rep.max_abs = std::max(rep.max_abs, std::abs(v - rep.initial_value));
  }
  rep.relative = rep.max_abs / (1.0 + std::abs(rep.initial_value));
  return rep;
}

Expr poisson_bracket_expr(const Expr& f, const Expr& g, const SymplecticStructure& s,
                          std::span<const std::string> variables) {
  int d = s.dim();
  if (static_cast<int>(variables.size()) != d)
    throw DefinitionError("poisson_bracket: variable count mismatch");
  std::vector<Expr> df, dg;
  df.reserve(d);
  dg.reserve(d);
  for (const auto& v : variables) {
    df.push_back(f.diff(v));
    dg.push_back(g.diff(v));
  }
  // {F,G} = grad F . X_G = -grad F^T W^{-1} grad G; the sign makes
  // {q,p} = +1 for the canonical W.
  const auto& winv = s.w_inverse();
  Expr out = Expr::constant(0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double c = -winv[i][j];
      if (c != 0.0) out = out + Expr::constant(c) * df[i] * dg[j];
    }
  return out;
}

double poisson_bracket(const Expr& f, const Expr& g, const SymplecticStructure& s,
                       std::span<const std::string> variables,
                       std::span<const double> x,
                       const std::map<std::string, double>& parameters) {
  Expr b = poisson_bracket_expr(f, g, s, variables);
  CompiledExpr c(b, variables, parameters);
  return c.eval(x);
}

std::vector<BracketReport> involution_report(
    const SystemDef& sys, std::span<const NamedExpr> qs,
    std::span<const std::vector<double>> points, double rtol) {
  const auto& s = sys.hamiltonian().symplectic;
  std::vector<BracketReport> out;
  std::vector<std::vector<CompiledExpr>> grads;
  grads.reserve(qs.size());
  for (const auto& q : qs) grads.push_back(compile_gradient(sys, q.expr));

  std::vector<double> gi(sys.dim()), gj(sys.dim());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    for (std::size_t j = i + 1; j < qs.size(); ++j) {
      BracketReport rep;
      rep.i = i;
      rep.j = j;
      rep.name_i = qs[i].name;
      rep.name_j = qs[j].name;
      CompiledExpr bracket(
          poisson_bracket_expr(qs[i].expr, qs[j].expr, s, sys.variables()),
          sys.variables(), sys.parameters());
      for (const auto& p : points) {
        std::vector<double> x = sys.wrap(p);
        double b, sg;
        try {
          b = bracket.eval(x);
          for (int k = 0; k < sys.dim(); ++k) {
            gi[k] = grads[i][k].eval(x);
            gj[k] = grads[j][k].eval(x);
          }
          sg = norm2(gi) * norm2(gj);
        } catch (const EvalError&) {
          continue;
        }
        ++rep.samples;
        rep.max_scale = std::max(rep.max_scale, sg);
        if (std::abs(b) >= rep.max_abs) {
          rep.max_abs = std::abs(b);
          rep.worst_point = p;
        }
      }
      rep.tolerance = rtol * (1.0 + rep.max_scale);
      rep.pass = rep.max_abs <= rep.tolerance;
      out.push_back(std::move(rep));
    }
  }
  return out;
}

int independence_rank(std::span<const Expr> qs, std::span<const std::string> variables,
                      const std::map<std::string, double>& parameters,
                      std::span<const double> x, double rank_rtol, double floor) {
  if (qs.empty()) throw std::invalid_argument("independence_rank: no functions");
  const int r = static_cast<int>(qs.size());
  const int d = static_cast<int>(variables.size());
  Eigen::MatrixXd jac(r, d);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < d; ++j) {
      CompiledExpr c(qs[i].diff(variables[j]), variables, parameters);
      jac(i, j) = c.eval(x);
    }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const auto& sigma = svd.singularValues();
  double smax = sigma.size() > 0 ? sigma(0) : 0.0;
  if (smax < floor) return 0;
  int rank = 0;
  for (int i = 0; i < sigma.size(); ++i)
    if (sigma(i) >= rank_rtol * smax) ++rank;
  return rank;
}

int independence_rank(const SystemDef& sys, std::span<const NamedExpr> qs,
                      std::span<const double> x, double rank_rtol, double floor) {
  std::vector<Expr> exprs;
  exprs.reserve(qs.size());
  for (const auto& q : qs) exprs.push_back(q.expr);
  std::vector<double> xw = sys.wrap(x);
  return independence_rank(exprs, sys.variables(), sys.parameters(), xw, rank_rtol,
                           floor);
}

}  // namespace stabcert
