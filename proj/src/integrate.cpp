#include "stabcert/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

namespace stabcert {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                 kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kA71 = 35.0 / 384, kA73 = 500.0 / 1113, kA74 = 125.0 / 192,
                 kA75 = -2187.0 / 6784, kA76 = 11.0 / 84;
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;

// Field evaluator with preallocated scratch; wraps periodic coordinates
// before evaluating the compiled components.
class FieldEval {
 public:
  explicit FieldEval(const SystemDef& sys) : sys_(sys), xw_(sys.dim()) {}

  void operator()(std::span<const double> x, std::vector<double>& out) {
    const auto& periodic = sys_.periodic();
    for (std::size_t i = 0; i < xw_.size(); ++i) {
      double v = x[i];
      if (periodic[i]) {
        v = std::remainder(v, 2.0 * std::numbers::pi);
      }
      xw_[i] = v;
    }
    const auto& f = sys_.field_compiled();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f[i].eval(xw_);
  }

 private:
  const SystemDef& sys_;
  std::vector<double> xw_;
};

bool norm_increasing(const std::vector<double>& norms, std::size_t window) {
  if (norms.size() < window + 1) return false;
  for (std::size_t i = norms.size() - window; i < norms.size(); ++i)
    if (norms[i] <= norms[i - 1]) return false;
  return true;
}

struct PowerFit {
  double alpha = 0.0;
  double rss = std::numeric_limits<double>::infinity();
  bool valid = false;
};

// Least squares of log(v) against log|t_star - t|.
PowerFit fit_exponent(std::span<const double> ts, std::span<const double> vs,
                      double t_star) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double tau = std::abs(t_star - ts[i]);
    if (tau <= 0.0 || vs[i] <= 0.0) continue;
    double x = std::log(tau), y = std::log(vs[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  PowerFit out;
  if (n < 5) return out;
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) return out;
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  double rss = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double tau = std::abs(t_star - ts[i]);
    if (tau <= 0.0 || vs[i] <= 0.0) continue;
    double r = std::log(vs[i]) - (intercept + slope * std::log(tau));
    rss += r * r;
  }
  out.alpha = -slope;
  out.rss = rss;
  out.valid = true;
  return out;
}

// Scan + golden-section refine the singular time that best explains the
// samples as |x| ~ C (t_star - t)^(-alpha).
std::pair<double, PowerFit> scan_singular_time(std::span<const double> ts,
                                               std::span<const double> vs,
                                               double dir) {
  double t_last = ts.back();
  double span = std::abs(ts.back() - ts.front());
  if (span <= 0.0) return {t_last, {}};
  double best_delta = 0.0;
  PowerFit best;
  for (int k = 0; k < 96; ++k) {
    // log-spaced offsets from 1e-6*span to 4*span
    double delta = span * 4.0 * std::pow(10.0, -6.0 * (1.0 - k / 95.0));
    PowerFit f = fit_exponent(ts, vs, t_last + dir * delta);
    if (f.valid && f.rss < best.rss) {
      best = f;
      best_delta = delta;
    }
  }
  if (!best.valid) return {t_last, best};
  // golden-section on log(delta) around the best grid point
  double lo = std::log(best_delta) - 0.3, hi = std::log(best_delta) + 0.3;
  constexpr double kPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kPhi * (b - a), x2 = a + kPhi * (b - a);
  auto rss_at = [&](double logd) {
    PowerFit f = fit_exponent(ts, vs, t_last + dir * std::exp(logd));
    return f.valid ? f.rss : std::numeric_limits<double>::infinity();
  };
  double f1 = rss_at(x1), f2 = rss_at(x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - kPhi * (b - a);
      f1 = rss_at(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + kPhi * (b - a);
      f2 = rss_at(x2);
    }
  }
  double delta = std::exp(0.5 * (a + b));
  PowerFit f = fit_exponent(ts, vs, t_last + dir * delta);
  if (f.valid && f.rss <= best.rss) return {t_last + dir * delta, f};
  return {t_last + dir * best_delta, best};
}

}  // namespace

BlowupReport fit_blowup(const SystemDef& sys, const Trajectory& traj,
                        std::size_t window) {
  BlowupReport rep;
  rep.witness_state = traj.states.back();
  rep.witness_t = traj.times.back();
  std::size_t n = traj.size();
  std::size_t m = std::min(window, n);
  std::vector<double> ts(traj.times.end() - m, traj.times.end());
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i)
    norms[i] = sys.escape_norm(traj.states[n - m + i]);
  double dir = traj.times.back() >= traj.times.front() ? 1.0 : -1.0;

  auto [t_star, fit] = scan_singular_time(ts, norms, dir);
  if (!fit.valid || fit.alpha <= 0.05) {
    rep.t_est = traj.times.back();
    rep.fit_ok = false;
    return rep;
  }
  rep.t_est = t_star;
  rep.alpha_norm = fit.alpha;
  rep.fit_ok = true;
  rep.alpha_components.assign(sys.dim(), std::numeric_limits<double>::quiet_NaN());
  for (int c = 0; c < sys.dim(); ++c) {
    std::vector<double> vs(m);
    for (std::size_t i = 0; i < m; ++i) vs[i] = std::abs(traj.states[n - m + i][c]);
    PowerFit f = fit_exponent(ts, vs, t_star);
    if (f.valid) rep.alpha_components[c] = f.alpha;
  }
  return rep;
}

Trajectory integrate_adaptive(const SystemDef& sys, std::span<const double> x0,
                              double t0, double t1, const AdaptiveOptions& opts) {
  if (static_cast<int>(x0.size()) != sys.dim())
    throw DefinitionError("initial state dimension mismatch");
  if (t1 == t0) throw std::invalid_argument("integrate_adaptive: t1 == t0");
  if (opts.rtol <= 0 || opts.atol <= 0)
    throw std::invalid_argument("integrate_adaptive: tolerances must be positive");

  const std::size_t d = x0.size();
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double h_min = opts.h_min_factor * std::max(1.0, std::abs(t1 - t0));
  const double h_max = std::abs(t1 - t0);

  Trajectory traj;
  traj.system = sys.name();
  FieldEval field(sys);

  std::vector<double> y(x0.begin(), x0.end());
  std::vector<double> k1(d), k2(d), k3(d), k4(d), k5(d), k6(d), k7(d);
  std::vector<double> ytmp(d), ynew(d), yerr(d);
  std::vector<double> norms;

  double t = t0;

  auto record = [&](double tt, const std::vector<double>& state,
                    const std::vector<double>& deriv, double h) {
    traj.times.push_back(tt);
    traj.states.push_back(state);
    traj.derivs.push_back(deriv);
    traj.step_sizes.push_back(h);
    norms.push_back(sys.escape_norm(state));
  };

  try {
    field(y, k1);
  } catch (const EvalError& e) {
    traj.termination = {TerminationKind::DomainError, t, e.what(), std::nullopt};
    record(t, y, std::vector<double>(d, 0.0), 0.0);
    return traj;
  }
  record(t, y, k1, 0.0);

  // initial step: conservative norm-based guess
  double sc = 0.0, scf = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double w = opts.atol + opts.rtol * std::abs(y[i]);
    sc += (y[i] / w) * (y[i] / w);
    scf += (k1[i] / w) * (k1[i] / w);
  }
  double h = (scf > 1e-20 && sc > 1e-20) ? 0.01 * std::sqrt(sc / scf) : 1e-6;
  h = std::min(h, h_max);

  double err_prev = 1e-4;
  bool rejected = false;

  for (std::size_t step = 0; step < opts.max_steps; ++step) {
    bool last = false;
    if (dir * (t + dir * h - t1) >= 0.0) {
      h = std::abs(t1 - t);
      last = true;
    }
    double hs = dir * h;

    try {
      for (std::size_t i = 0; i < d; ++i) ytmp[i] = y[i] + hs * kA21 * k1[i];
      field(ytmp, k2);
      for (std::size_t i = 0; i < d; ++i)
        ytmp[i] = y[i] + hs * (kA31 * k1[i] + kA32 * k2[i]);
      field(ytmp, k3);
      for (std::size_t i = 0; i < d; ++i)
        ytmp[i] = y[i] + hs * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
      field(ytmp, k4);
      for (std::size_t i = 0; i < d; ++i)
        ytmp[i] = y[i] + hs * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] + kA54 * k4[i]);
      field(ytmp, k5);
      for (std::size_t i = 0; i < d; ++i)
        ytmp[i] = y[i] + hs * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] +
                               kA64 * k4[i] + kA65 * k5[i]);
      field(ytmp, k6);
      for (std::size_t i = 0; i < d; ++i)
        ynew[i] = y[i] + hs * (kA71 * k1[i] + kA73 * k3[i] + kA74 * k4[i] +
                               kA75 * k5[i] + kA76 * k6[i]);
      field(ynew, k7);
    } catch (const EvalError& e) {
      // shrink into the step before giving up; the state may be leaving
      // the expression domain only beyond the current point
      if (h > 4.0 * h_min) {
        h *= 0.25;
        rejected = true;
        continue;
      }
      traj.termination = {TerminationKind::DomainError, t, e.what(), std::nullopt};
      return traj;
    }

    double err = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      yerr[i] = hs * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] + kE5 * k5[i] +
                      kE6 * k6[i] + kE7 * k7[i]);
      double w = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err += (yerr[i] / w) * (yerr[i] / w);
    }
    err = std::sqrt(err / static_cast<double>(d));

    if (err <= 1.0) {
      t = last ? t1 : t + hs;
      y = ynew;
      k1 = k7;  // FSAL
      record(t, y, k1, hs);

      if (norms.back() >= opts.r_max) {
        Termination term{TerminationKind::Blowup, t, "", std::nullopt};
        term.blowup = fit_blowup(sys, traj);
        term.detail = "escape norm reached r_max";
        traj.termination = term;
        return traj;
      }
      if (last) {
        traj.termination = {TerminationKind::ReachedTEnd, t, "", std::nullopt};
        return traj;
      }
      // PI controller (Lund stabilization)
      double fac = std::pow(err > 0 ? err : 1e-16, -0.2 + 0.04 * 0.75) *
                   std::pow(err_prev, 0.04);
      fac = std::min(10.0, std::max(0.2, 0.9 * fac));
      if (rejected) fac = std::min(fac, 1.0);
      h = std::min(h * fac, h_max);
      err_prev = std::max(err, 1e-4);
      rejected = false;
    } else {
      h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
      rejected = true;
    }

    if (h < h_min) {
      if (norm_increasing(norms, 10)) {
        Termination term{TerminationKind::Blowup, t, "step size underflow with growing norm",
                         std::nullopt};
        term.blowup = fit_blowup(sys, traj);
        traj.termination = term;
      } else {
        traj.termination = {TerminationKind::DomainError, t,
                            "step size underflow without norm growth", std::nullopt};
      }
      return traj;
    }
  }
  traj.termination = {TerminationKind::DomainError, t, "step budget exhausted",
                      std::nullopt};
  return traj;
}

Trajectory integrate_symplectic(const SystemDef& sys, std::span<const double> x0,
                                double h, long long n_steps,
                                const SymplecticOptions& opts) {
  if (!sys.is_hamiltonian())
    throw DefinitionError("integrate_symplectic requires Hamiltonian dynamics");
  if (h <= 0) throw std::invalid_argument("integrate_symplectic: h must be positive");

  const std::size_t d = x0.size();
  Trajectory traj;
  traj.system = sys.name();
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  FieldEval field(sys);

  std::vector<double> y(x0.begin(), x0.end());
  std::vector<double> mid(d), f(d), ynext(d), yprev(d);
  traj.times.push_back(0.0);
  traj.states.push_back(y);
  traj.step_sizes.push_back(0.0);

  for (long long k = 0; k < n_steps; ++k) {
    // predictor: explicit Euler
    field(y, f);
    for (std::size_t i = 0; i < d; ++i) ynext[i] = y[i] + h * f[i];

    bool converged = false;
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
      yprev = ynext;
      for (std::size_t i = 0; i < d; ++i) mid[i] = 0.5 * (y[i] + ynext[i]);
      field(mid, f);
      double delta = 0.0, scale = 1.0;
      for (std::size_t i = 0; i < d; ++i) {
        ynext[i] = y[i] + h * f[i];
        delta = std::max(delta, std::abs(ynext[i] - yprev[i]));
        scale = std::max(scale, std::abs(ynext[i]));
      }
      if (delta <= opts.fixed_point_tol * scale) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw IntegrationError("implicit midpoint fixed point did not converge at step " +
                                 std::to_string(k),
                             traj.times.back(), y);
    y = ynext;
    traj.times.push_back(static_cast<double>(k + 1) * h);
    traj.states.push_back(y);
    traj.step_sizes.push_back(h);
  }
  traj.termination = {TerminationKind::ReachedTEnd, traj.times.back(), "", std::nullopt};
  return traj;
}

std::vector<double> Trajectory::sample_at(double t) const {
  if (times.empty()) throw std::out_of_range("empty trajectory");
  if (times.size() == 1) return states.front();
  const bool forward = times.back() >= times.front();
  auto in_range = [&](double a, double b) {
    return forward ? (t >= a && t <= b) : (t <= a && t >= b);
  };
  if (!in_range(times.front(), times.back()))
    throw std::out_of_range("sample time outside trajectory range");

  // binary search for the bracketing segment
  std::size_t lo = 0, hi = times.size() - 1;
  while (hi - lo > 1) {
    std::size_t midx = (lo + hi) / 2;
    if (in_range(times[lo], times[midx])) hi = midx;
    else lo = midx;
  }
  double ta = times[lo], tb = times[hi];
  double hseg = tb - ta;
  if (hseg == 0.0) return states[lo];
  double s = (t - ta) / hseg;

  const auto& xa = states[lo];
  const auto& xb = states[hi];
  std::vector<double> out(xa.size());
  if (!has_dense_output()) {
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = xa[i] + s * (xb[i] - xa[i]);
    return out;
  }
  const auto& fa = derivs[lo];
  const auto& fb = derivs[hi];
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  double h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s);
  double h11 = s * s * (s - 1);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = h00 * xa[i] + h10 * hseg * fa[i] + h01 * xb[i] + h11 * hseg * fb[i];
  return out;
}

void Trajectory::write_csv(std::ostream& os, std::span<const std::string> variables) const {
  os << "t";
  for (const auto& v : variables) os << "," << v;
  os << "\n";
  char buf[32];
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", times[k]);
    os << buf;
    for (double x : states[k]) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      os << "," << buf;
    }
    os << "\n";
  }
}

}  // namespace stabcert
