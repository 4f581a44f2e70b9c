#ifndef STABCERT_ARNOLD_HPP
#define STABCERT_ARNOLD_HPP

#include <span>
#include <string>
#include <vector>

#include "stabcert/classify.hpp"
#include "stabcert/config.hpp"
#include "stabcert/conserved.hpp"
#include "stabcert/integrate.hpp"
#include "stabcert/levelset.hpp"
#include "stabcert/system.hpp"

namespace stabcert {

struct FlowResult {
  std::string q_name;
  Trajectory traj;
  double max_level_drift = 0.0;  // worst relative drift of any Q_j along this flow
  bool drift_violation = false;
  bool blowup = false;
};

/// Integrate the Hamiltonian flow of each Q_i from x0 over [0, T] and
/// monitor that every Q_j stays on its level. Requires that the Q_i pass
/// involution and rank checks at x0.
std::vector<FlowResult> symmetry_flows(const SystemDef& sys,
                                       std::span<const NamedExpr> qs,
                                       std::span<const double> x0, double T,
                                       const AnalysisConfig& cfg);

struct RecurrenceStat {
  double min_return = 0.0;  // wrapped distance to the initial state
  double at_time = 0.0;
  double extent = 0.0;      // max wrapped distance from the initial state
};

/// Minimum wrapped return distance to the initial state after discarding
/// the leading transient fraction, computed on dense-output resamples with
/// local refinement.
RecurrenceStat recurrence_statistic(const SystemDef& sys, const Trajectory& traj,
                                    double transient_fraction = 0.1,
                                    int resample = 65536);

/// Least-squares slope of each coordinate against time over the
/// post-transient window. Periodic coordinates use the unwrapped angles
/// the trajectory already stores.
std::vector<double> drift_rate(const SystemDef& sys, const Trajectory& traj,
                               double transient_fraction = 0.1, int resample = 4096);

enum class LevelClass { TorusEvidence, CylinderEvidence, IncompleteFlow, Inconclusive };
const char* to_string(LevelClass c);

struct FlowStat {
  std::string name;
  bool blowup = false;
  bool recurrent = false;
  bool definitely_drifting = false;
  RecurrenceStat recurrence;
  std::vector<double> drift_rates;
  std::vector<double> coord_ranges;  // per-coordinate amplitude along the flow
  double max_level_drift = 0.0;
};

struct LevelTopologyReport {
  std::vector<std::string> q_names;
  std::vector<double> level;  // Q values at the seed
  std::vector<double> seed;
  double horizon = 0.0;
  std::vector<FlowStat> flows;       // one per symmetry
  FlowStat dynamics_flow;            // the X_H flow on the same level set
  LevelClass classification = LevelClass::Inconclusive;
  int k_compact = 0;                 // recurrent flow directions
  double recurrence_threshold = 0.0;
  double drift_threshold = 0.0;
  std::string note;
};

/// Torus vs cylinder classification of the common level set through x0:
/// every flow recurrent -> TorusEvidence; definite rectilinear drift ->
/// CylinderEvidence with k = number of recurrent directions; any flow
/// blow-up -> IncompleteFlow; mixed statistics -> Inconclusive.
LevelTopologyReport classify_level_set(const SystemDef& sys,
                                       std::span<const NamedExpr> qs,
                                       std::span<const double> x0, double T,
                                       const AnalysisConfig& cfg);

struct IffAssessment {
  std::vector<BracketReport> brackets;
  bool involution_pass = false;
  int expected_rank = 0;
  std::size_t rank_deficient_points = 0;
  std::size_t rank_points_checked = 0;
  bool independence_pass = false;
  bool completeness_pass = false;  // no IncompleteFlow across the probed seeds
  std::vector<LevelTopologyReport> per_seed;
  ConfiningVerdict tuple_confining;
  bool hypotheses_hold = false;
  bool confining_evidence = false;
  bool theorem_inapplicable = false;  // incomplete flows (third case)
  std::string assessment;
  std::vector<std::string> failures;
};

/// Aggregate check of the integrability hypotheses (involution, sampled
/// independence, completeness evidence) plus the confining probe of the
/// full tuple; requires exactly n = dim/2 candidates.
IffAssessment iff_assessment(const SystemDef& sys, std::span<const NamedExpr> qs,
                             std::span<const std::vector<double>> seeds, double T,
                             const AnalysisConfig& cfg);

}  // namespace stabcert

#endif  // STABCERT_ARNOLD_HPP
