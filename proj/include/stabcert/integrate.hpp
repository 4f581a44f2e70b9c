#ifndef STABCERT_INTEGRATE_HPP
#define STABCERT_INTEGRATE_HPP

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stabcert/system.hpp"

namespace stabcert {

struct IntegrationError : std::runtime_error {
  IntegrationError(std::string msg, double t_at, std::vector<double> state_at)
      : std::runtime_error(std::move(msg)), t(t_at), state(std::move(state_at)) {}
  double t;
  std::vector<double> state;
};

// Power-law fit of the escape norm near a finite-time singularity,
// |x(t)| ~ C |t_est - t|^(-alpha).
struct BlowupReport {
  double t_est = 0.0;
  double alpha_norm = 0.0;
  std::vector<double> alpha_components;  // NaN where a component carries no signal
  std::vector<double> witness_state;
  double witness_t = 0.0;
  bool fit_ok = false;  // false: t_est not resolved, reported as beyond witness_t
};

enum class TerminationKind { ReachedTEnd, Blowup, DomainError };

struct Termination {
  TerminationKind kind = TerminationKind::ReachedTEnd;
  double t = 0.0;
  std::string detail;
  std::optional<BlowupReport> blowup;
};

// Time-stamped samples of one integration run. Times are strictly
// monotone (decreasing for backward runs); states keep periodic
// coordinates unwrapped. `derivs` is filled by the adaptive integrator
// and enables cubic Hermite dense output.
struct Trajectory {
  std::string system;
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> derivs;
  std::vector<double> step_sizes;
  Termination termination;

  std::size_t size() const { return times.size(); }
  bool has_dense_output() const { return derivs.size() == times.size() && !derivs.empty(); }

  /// Cubic Hermite interpolation at time t (t within the covered range).
  std::vector<double> sample_at(double t) const;

  /// CSV export: header `t,var1,...,vard`, 17 significant digits.
  void write_csv(std::ostream& os, std::span<const std::string> variables) const;
};

struct AdaptiveOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double r_max = 1e8;             // escape-norm radius that declares blow-up
  double h_min_factor = 1e-12;    // h_min = factor * max(1, |t1 - t0|)
  std::size_t max_steps = 20'000'000;
};

/// Embedded Runge-Kutta 5(4) with Dormand-Prince coefficients and PI step
/// control; local error per step <= atol + rtol*|state|. Backward runs
/// (t1 < t0) are supported. Blow-up is a termination, not an error.
Trajectory integrate_adaptive(const SystemDef& sys, std::span<const double> x0,
                              double t0, double t1,
                              const AdaptiveOptions& opts = {});

struct SymplecticOptions {
  double fixed_point_tol = 1e-13;
  int max_sweeps = 50;
};

/// Implicit midpoint rule with fixed-point iteration per step. Requires
/// Hamiltonian dynamics. Throws IntegrationError on non-convergence.
Trajectory integrate_symplectic(const SystemDef& sys, std::span<const double> x0,
                                double h, long long n_steps,
                                const SymplecticOptions& opts = {});

/// Fit a blow-up time and exponents from the tail of a diverging run.
/// `window` samples are used (the last 50 by default).
BlowupReport fit_blowup(const SystemDef& sys, const Trajectory& traj,
                        std::size_t window = 50);

}  // namespace stabcert

#endif  // STABCERT_INTEGRATE_HPP
