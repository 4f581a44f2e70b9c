#ifndef STABCERT_REPORT_HPP
#define STABCERT_REPORT_HPP

#include <json.hpp>

#include "stabcert/arnold.hpp"
#include "stabcert/classify.hpp"
#include "stabcert/config.hpp"
#include "stabcert/conserved.hpp"
#include "stabcert/corpus.hpp"
#include "stabcert/integrate.hpp"
#include "stabcert/levelset.hpp"

namespace stabcert {

using json = nlohmann::json;

json to_json(const BlowupReport& r);
json to_json(const Termination& t);
json to_json(const TrajectoryVerdict& v);
json to_json(const ResidualReport& r);
json to_json(const DriftReport& r);
json to_json(const BracketReport& r);
json to_json(const ComponentReport& r);
json to_json(const ConfiningVerdict& v);
json to_json(const PropernessVerdict& v);
json to_json(const SosEquivalenceReport& r);
json to_json(const FutilityAdvisory& a);
json to_json(const EvidenceEntry& e);
json to_json(const Certificate& c);
json to_json(const CertifyReport& r);
json to_json(const GhostReport& r);
json to_json(const RecurrenceStat& s);
json to_json(const FlowStat& s);
json to_json(const LevelTopologyReport& r);
json to_json(const IffAssessment& a);
json to_json(const ExpectationResult& r);

json to_json(const AnalysisConfig& cfg);
/// Merge JSON fields onto an existing config (unknown keys rejected).
void merge_config(AnalysisConfig& cfg, const json& j);
/// Digest of the effective configuration, for report reproducibility.
std::string config_digest(const AnalysisConfig& cfg);

/// ISO-8601 UTC timestamp of now.
std::string timestamp_utc();

/// Assemble the top-level report object:
/// {tool_version, timestamp, system, command, config_digest, certificate,
///  sub_reports}.
json assemble_report(const std::string& system, const std::string& command,
                     const AnalysisConfig& cfg, json certificate,
                     json sub_reports);

}  // namespace stabcert

#endif  // STABCERT_REPORT_HPP
