#ifndef STABCERT_CONFIG_HPP
#define STABCERT_CONFIG_HPP

#include <string>
#include <vector>

namespace stabcert {

inline constexpr const char* kToolVersion = "0.1.0";

// One layer of defaults for every analysis; flag and file overrides are
// applied by the CLI (flags > file > defaults).
struct AnalysisConfig {
  // integration
  double rtol = 1e-9;
  double atol = 1e-12;
  double horizon = 1000.0;
  double r_max = 1e8;

  // sampling for residual / bracket / rank checks
  int sample_count = 1000;
  double sample_half_width = 5.0;
  double conservation_rtol = 1e-8;
  double bracket_rtol = 1e-8;
  double rank_rtol = 1e-8;

  // level-set probing
  std::vector<double> probe_scales{2.0, 8.0, 32.0};
  int resolution = 0;  // 0 = dimension default
  long long cell_budget = 100'000'000;

  // escape classification
  std::vector<double> escape_radii{1e2, 1e3, 1e4};

  // unboundedness probing
  std::vector<double> ghost_scales{1.0, 10.0, 100.0, 1000.0};
  double ghost_threshold = 1e6;
  int ghost_samples = 256;
  int ghost_ascent_steps = 200;

  // symplectic integration
  double midpoint_tol = 1e-13;
  int midpoint_max_sweeps = 50;

  // level-set topology (recurrence / drift)
  double transient_fraction = 0.1;
  double recurrence_threshold = 1e-2;  // relative to 1 + flow extent
  double drift_threshold = 1e-3;       // |slope|*T relative to 1 + flow extent
  double flow_drift_tol = 1e-6;        // conserved-level drift along symmetry flows
  double arnold_horizon = 100.0;
  int resample_count = 65536;

  // analysis seeds (initial states); empty = low-discrepancy default
  std::vector<std::vector<double>> seeds;
};

/// FNV-1a 64-bit hex digest; used for evidence input digests and the
/// report config digest.
std::string fnv1a_hex(std::string_view data);

}  // namespace stabcert

#endif  // STABCERT_CONFIG_HPP
