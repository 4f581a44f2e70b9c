#ifndef STABCERT_LEVELSET_HPP
#define STABCERT_LEVELSET_HPP

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stabcert/expr.hpp"
#include "stabcert/system.hpp"

namespace stabcert {

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A map M -> R^r bound to a chart (variable order, parameters,
// periodic flags).
struct ScalarMap {
  std::string name;
  std::vector<Expr> components;
  std::vector<std::string> variables;
  std::vector<bool> periodic;
  std::map<std::string, double> parameters;

  static ScalarMap from_system(const SystemDef& sys, std::string name,
                               std::vector<Expr> components);
  std::size_t r() const { return components.size(); }
  std::size_t dim() const { return variables.size(); }
  std::vector<double> value_at(std::span<const double> x) const;
};

// Finite probe window: axis-aligned box of `resolution` cells per axis.
// Periodic axes always span one full circle (half-width pi) so that cell
// adjacency wraps consistently.
struct ProbeBox {
  std::vector<double> center;
  std::vector<double> half_widths;
  int resolution = 0;
  std::vector<bool> periodic;

  static ProbeBox centered(std::size_t dim, double half_width, int resolution,
                           std::vector<bool> periodic);
  /// Largest half-width over non-periodic axes (pi if all axes periodic).
  double scale() const;
  long long total_cells() const;
  void validate(long long cell_budget) const;
};

/// Default cells/axis by dimension: 256 (d<=2), 64 (d<=4), 16 (d<=6);
/// higher dimensions are refused.
int default_resolution(std::size_t dim);

enum class ComponentOutcome { Bounded, TouchesBoundary, SeedNotInSet };

struct ComponentReport {
  std::string map_name;
  std::vector<double> level;
  std::vector<double> seed;
  ComponentOutcome outcome = ComponentOutcome::SeedNotInSet;
  std::size_t cell_count = 0;
  bool touches_boundary = false;
  double bounding_radius = 0.0;  // from the box center
  double scale = 0.0;            // box half-width
  int resolution = 0;
};

// Flood fill of the path component of F^{-1}(mu) through `seed`, on the
// cell grid of `box`. A cell is in-set when, for every component i,
// F_i - mu_i attains both signs at the 2^d cell corners or some corner
// lies within 1e-9*(1+|mu_i|). Adjacency is face adjacency; periodic
// axes wrap. Optional `cells_csv` dumps `i1,...,id,in_set` rows.
ComponentReport component_flood_fill(const ScalarMap& f, std::span<const double> mu,
                                     std::span<const double> seed, const ProbeBox& box,
                                     long long cell_budget = 100'000'000,
                                     std::ostream* cells_csv = nullptr);

struct LevelSeed {
  std::vector<double> level;
  std::vector<double> seed;
};

enum class Confining { ConfiningEvidence, NotConfiningAtScale, Inconclusive };

struct ComponentProbe {
  enum class Outcome { BoundedComponent, EscapesAllScales, Inconclusive };
  LevelSeed target;
  Outcome outcome = Outcome::Inconclusive;
  double bounded_at_scale = 0.0;  // meaningful for BoundedComponent
  std::string note;
  std::vector<ComponentReport> attempts;
};

struct ConfiningVerdict {
  Confining verdict = Confining::Inconclusive;
  std::vector<ComponentProbe> probes;
  std::vector<double> scales;
  int resolution = 0;
};

/// Probe each (level, seed) at increasing scales until its component stops
/// touching the boundary. ConfiningEvidence iff every probed component is
/// bounded at some scale.
ConfiningVerdict confining_probe(const ScalarMap& f, std::span<const LevelSeed> targets,
                                 std::span<const double> scales, int resolution = 0,
                                 long long cell_budget = 100'000'000);

enum class Properness { ProperEvidence, NotProperEvidence, Inconclusive };

struct PropernessVerdict {
  Properness verdict = Properness::Inconclusive;
  std::vector<double> k_lo, k_hi;
  double bounded_at_scale = 0.0;
  std::vector<std::vector<int>> witness_cells;  // marked boundary cells (last scale)
  std::vector<double> scales;
  int resolution = 0;
  std::string note;
};

/// Mark cells whose corner values enter or straddle K component-wise; the
/// preimage evidence is NotProper when marked cells reach the boundary at
/// every scale, Proper when the marked region stays interior at some scale.
PropernessVerdict properness_probe(const ScalarMap& f, std::span<const double> k_lo,
                                   std::span<const double> k_hi,
                                   std::span<const double> scales, int resolution = 0,
                                   long long cell_budget = 100'000'000);

struct SosEquivalenceEntry {
  double c = 0.0;
  Properness j_verdict = Properness::Inconclusive;
  Properness p_verdict = Properness::Inconclusive;
  bool agree = false;
};

struct SosEquivalenceReport {
  std::vector<SosEquivalenceEntry> entries;
  std::string p_rendered;  // the sum of squares actually probed
  bool all_agree = false;
};

/// Probe J = (Q_1..Q_r) against K = [-c,c]^r and P = sum Q_i^2 against
/// [0, r*c^2] for c in {1,2,4}; the two properness verdicts must agree,
/// disagreement flags a numerical artifact.
SosEquivalenceReport sum_of_squares_equivalence(const ScalarMap& j,
                                                std::span<const double> scales,
                                                int resolution = 0,
                                                long long cell_budget = 100'000'000);

struct FutilityAdvisory {
  std::string message;
  std::vector<double> witness_level;
  std::vector<double> witness_seed;
  double witness_scale = 0.0;
};

/// Lemma-level propagation: an unbounded-component witness rules out every
/// functional combination g(F). No witness (or Inconclusive input) emits
/// nothing.
std::optional<FutilityAdvisory> composition_futility(const std::string& map_name,
                                                     const ConfiningVerdict& v);
std::optional<FutilityAdvisory> composition_futility(const std::string& map_name,
                                                     const PropernessVerdict& v);

const char* to_string(Confining v);
const char* to_string(Properness v);
const char* to_string(ComponentOutcome v);
const char* to_string(ComponentProbe::Outcome v);

}  // namespace stabcert

#endif  // STABCERT_LEVELSET_HPP
