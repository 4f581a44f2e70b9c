#ifndef STABCERT_CORPUS_HPP
#define STABCERT_CORPUS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stabcert/config.hpp"
#include "stabcert/levelset.hpp"
#include "stabcert/system.hpp"

namespace stabcert {

// One machine-checkable expected behavior of a corpus system under the
// default configuration. The whole table doubles as the integration-test
// substrate (tests and `corpus run-all` both execute it).
struct Expectation {
  std::string analysis;  // certify | classify | ghost | arnold | confining |
                         // properness | brackets
  std::string expected;  // expected verdict/class string
  std::vector<double> x0;            // start state where the analysis needs one
  double horizon = 0.0;              // 0 = configuration default
  bool backward = false;
  std::string map_name;              // conserved-candidate name, or "H"
  std::vector<LevelSeed> levels;     // confining targets (empty = from seeds)
  std::vector<double> k_lo, k_hi;    // properness window
  std::string via_contains;          // certify: required substring of `via`
  std::string note;
};

struct CorpusEntry {
  std::string id;
  std::string summary;
  std::map<std::string, double> default_params;
  std::vector<std::vector<double>> seeds;  // default analysis seeds
  std::vector<Expectation> expectations;
};

/// Metadata for all built-in systems, in a stable order.
const std::vector<CorpusEntry>& corpus_entries();

/// Look up one entry; nullptr when the id is unknown.
const CorpusEntry* corpus_find(const std::string& id);

/// Instantiate a built-in system. Unknown ids and invalid parameters throw
/// DefinitionError; soft diagnoses (a rational Kronecker slope) append to
/// `warnings` instead.
SystemDef builtin(const std::string& id,
                  const std::map<std::string, double>& params = {},
                  std::vector<std::string>* warnings = nullptr);

struct ExpectationResult {
  Expectation expectation;
  std::string actual;
  bool pass = false;
  std::string detail;
};

/// Execute one expectation under the given configuration.
ExpectationResult run_expectation(const CorpusEntry& entry, const Expectation& exp,
                                  const AnalysisConfig& cfg);

/// Execute an entry's whole table.
std::vector<ExpectationResult> run_expectations(const CorpusEntry& entry,
                                                const AnalysisConfig& cfg);

}  // namespace stabcert

#endif  // STABCERT_CORPUS_HPP
