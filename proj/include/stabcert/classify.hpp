#ifndef STABCERT_CLASSIFY_HPP
#define STABCERT_CLASSIFY_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stabcert/config.hpp"
#include "stabcert/conserved.hpp"
#include "stabcert/integrate.hpp"
#include "stabcert/levelset.hpp"
#include "stabcert/system.hpp"

namespace stabcert {

enum class TrajectoryClass { Bounded, EscapeNoBlowup, Blowup };

struct TrajectoryVerdict {
  TrajectoryClass cls = TrajectoryClass::Bounded;
  double horizon = 0.0;          // time span actually covered
  double max_norm = 0.0;         // max escape norm seen
  double radius_reached = 0.0;   // schedule radius that was exceeded
  std::vector<double> radii_crossed;
  std::optional<BlowupReport> blowup;
};

/// Bounded / escape / blow-up verdict for a finished run. Escape means the
/// escape norm exceeded the last schedule radius without a blow-up
/// termination; Bounded is always qualified by the covered horizon.
TrajectoryVerdict classify_trajectory(const SystemDef& sys, const Trajectory& traj,
                                      std::span<const double> escape_radii);

enum class Verdict {
  G1Certified,
  G2EvidenceNotG1,
  BlowupWitness,
  GhostEvidence,
  Inconclusive,
};
const char* to_string(Verdict v);
const char* to_string(TrajectoryClass c);

struct EvidenceEntry {
  std::string claim;
  std::string operation;
  std::string inputs_digest;
  std::string outcome;
  bool passed = false;
  double tolerance = 0.0;
  double scale = 0.0;
  std::string detail;
};

// Machine-checkable stability verdict. The verdict is always re-derivable
// from the evidence chain alone (see derive_g1_verdict); nothing else in
// the certificate may influence it.
struct Certificate {
  std::string system;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<EvidenceEntry> evidence;
  std::vector<std::string> caveats;
  std::string timestamp;
  std::string tool_version = kToolVersion;
};

/// Pure verdict derivation: G1Certified only when the chain contains at
/// least one passing conservation entry and one passing confining-probe
/// entry and no entry failed. Any corrupted entry degrades to Inconclusive.
Verdict derive_g1_verdict(std::span<const EvidenceEntry> evidence);

struct CertifyReport {
  Certificate certificate;
  std::vector<EvidenceEntry> attempts;  // every probe tried, including failures
  std::optional<FutilityAdvisory> futility;
  std::string via;  // winning candidate name or tuple description (empty if none)
};

/// Conserved-quantity certification pipeline: residual checks, per-candidate
/// confining probes, then the momentum-map tuple of all conserved
/// candidates; a failed tuple attaches the composition-futility advisory.
CertifyReport certify_g1(const SystemDef& sys,
                         std::span<const std::vector<double>> seeds,
                         const AnalysisConfig& cfg);

enum class GhostVerdict {
  GhostEvidence,
  BoundedBelowEvidence,
  BoundedAboveEvidence,
  Inconclusive,
};
const char* to_string(GhostVerdict v);

struct GhostReport {
  GhostVerdict verdict = GhostVerdict::Inconclusive;
  double h_max_found = 0.0;
  double h_min_found = 0.0;
  std::optional<std::vector<double>> witness_high;  // state with H > +threshold
  std::optional<std::vector<double>> witness_low;   // state with H < -threshold
  double threshold = 0.0;
  std::vector<double> scales;
  std::size_t samples_skipped = 0;
  std::string caveat;
};

/// Search for unboundedness witnesses of H in both directions over
/// expanding boxes: low-discrepancy sampling plus gradient ascent/descent
/// with backtracking line search from the best samples.
GhostReport ghost_probe(const SystemDef& sys, const AnalysisConfig& cfg);

/// Default analysis seeds when none are configured: low-discrepancy points
/// in [-1,1]^d (periodic axes sampled over the circle).
std::vector<std::vector<double>> default_seeds(const SystemDef& sys, std::size_t count);

}  // namespace stabcert

#endif  // STABCERT_CLASSIFY_HPP
