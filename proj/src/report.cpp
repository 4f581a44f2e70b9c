#include "stabcert/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>

namespace stabcert {

namespace {

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(finite_or_null(x));
  return a;
}

}  // namespace

json to_json(const BlowupReport& r) {
  json j;
  j["t_est"] = r.fit_ok ? json(r.t_est) : json(nullptr);
  j["t_est_note"] = r.fit_ok ? "power-law fit over the trailing window"
                             : "fit failed; singular time lies beyond witness_t";
  j["alpha_norm"] = finite_or_null(r.alpha_norm);
  j["alpha_components"] = vec(r.alpha_components);
  j["witness_t"] = r.witness_t;
  j["witness_state"] = vec(r.witness_state);
  j["fit_ok"] = r.fit_ok;
  return j;
}

json to_json(const Termination& t) {
  json j;
  switch (t.kind) {
    case TerminationKind::ReachedTEnd: j["kind"] = "ReachedTEnd"; break;
    case TerminationKind::Blowup: j["kind"] = "Blowup"; break;
    case TerminationKind::DomainError: j["kind"] = "DomainError"; break;
  }
  j["t"] = t.t;
  if (!t.detail.empty()) j["detail"] = t.detail;
  if (t.blowup) j["blowup"] = to_json(*t.blowup);
  return j;
}

json to_json(const TrajectoryVerdict& v) {
  json j;
  j["class"] = to_string(v.cls);
  j["horizon"] = v.horizon;
  j["max_escape_norm"] = v.max_norm;
  j["radii_crossed"] = vec(v.radii_crossed);
  if (v.cls == TrajectoryClass::EscapeNoBlowup) j["radius_reached"] = v.radius_reached;
  if (v.blowup) j["blowup"] = to_json(*v.blowup);
  return j;
}

json to_json(const ResidualReport& r) {
  json j;
  j["max_residual"] = r.max_residual;
  j["worst_point"] = vec(r.worst_point);
  j["gradient_scale"] = r.max_scale;
  j["samples_evaluated"] = r.samples_evaluated;
  j["samples_skipped"] = r.samples_skipped;
  return j;
}

json to_json(const DriftReport& r) {
  return json{{"max_abs", r.max_abs},
              {"relative", r.relative},
              {"initial_value", r.initial_value}};
}

json to_json(const BracketReport& r) {
  json j;
  j["pair"] = json::array({r.name_i, r.name_j});
  j["max_abs"] = r.max_abs;
  j["worst_point"] = vec(r.worst_point);
  j["gradient_scale"] = r.max_scale;
  j["samples"] = r.samples;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  return j;
}

json to_json(const ComponentReport& r) {
  json j;
  j["map"] = r.map_name;
  j["level"] = vec(r.level);
  j["seed"] = vec(r.seed);
  j["outcome"] = to_string(r.outcome);
  j["cell_count"] = r.cell_count;
  j["touches_boundary"] = r.touches_boundary;
  j["bounding_radius"] = r.bounding_radius;
  j["scale"] = r.scale;
  j["resolution"] = r.resolution;
  return j;
}

json to_json(const ConfiningVerdict& v) {
  json j;
  j["verdict"] = to_string(v.verdict);
  j["scales"] = vec(v.scales);
  j["resolution"] = v.resolution;
  json probes = json::array();
  for (const auto& p : v.probes) {
    json pj;
    pj["level"] = vec(p.target.level);
    pj["seed"] = vec(p.target.seed);
    pj["outcome"] = to_string(p.outcome);
    if (p.outcome == ComponentProbe::Outcome::BoundedComponent)
      pj["bounded_at_scale"] = p.bounded_at_scale;
    if (!p.note.empty()) pj["note"] = p.note;
    json attempts = json::array();
    for (const auto& a : p.attempts) attempts.push_back(to_json(a));
    pj["attempts"] = attempts;
    probes.push_back(pj);
  }
  j["probes"] = probes;
  return j;
}

json to_json(const PropernessVerdict& v) {
  json j;
  j["verdict"] = to_string(v.verdict);
  j["K_lo"] = vec(v.k_lo);
  j["K_hi"] = vec(v.k_hi);
  j["scales"] = vec(v.scales);
  j["resolution"] = v.resolution;
  if (v.verdict == Properness::ProperEvidence) j["bounded_at_scale"] = v.bounded_at_scale;
  json cells = json::array();
  for (const auto& c : v.witness_cells) {
    json ci = json::array();
    for (int i : c) ci.push_back(i);
    cells.push_back(ci);
  }
  j["witness_cells"] = cells;
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

json to_json(const SosEquivalenceReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back(json{{"c", e.c},
                           {"tuple_verdict", to_string(e.j_verdict)},
                           {"sum_of_squares_verdict", to_string(e.p_verdict)},
                           {"agree", e.agree}});
  return json{{"entries", entries},
              {"sum_of_squares", r.p_rendered},
              {"all_agree", r.all_agree}};
}

json to_json(const FutilityAdvisory& a) {
  json j;
  j["message"] = a.message;
  if (!a.witness_level.empty()) j["witness_level"] = vec(a.witness_level);
  if (!a.witness_seed.empty()) j["witness_seed"] = vec(a.witness_seed);
  if (a.witness_scale > 0) j["witness_scale"] = a.witness_scale;
  return j;
}

json to_json(const EvidenceEntry& e) {
  json j;
  j["claim"] = e.claim;
  j["operation"] = e.operation;
  j["inputs_digest"] = e.inputs_digest;
  j["outcome"] = e.outcome;
  j["passed"] = e.passed;
  if (e.tolerance > 0) j["tolerance"] = e.tolerance;
  if (e.scale > 0) j["scale"] = e.scale;
  if (!e.detail.empty()) j["detail"] = e.detail;
  return j;
}

json to_json(const Certificate& c) {
  json j;
  j["system"] = c.system;
  j["verdict"] = to_string(c.verdict);
  j["tool_version"] = c.tool_version;
  j["timestamp"] = c.timestamp;
  json ev = json::array();
  for (const auto& e : c.evidence) ev.push_back(to_json(e));
  j["evidence"] = ev;
  j["caveats"] = c.caveats;
  return j;
}

json to_json(const CertifyReport& r) {
  json j;
  j["certificate"] = to_json(r.certificate);
  json at = json::array();
  for (const auto& e : r.attempts) at.push_back(to_json(e));
  j["attempts"] = at;
  if (!r.via.empty()) j["via"] = r.via;
  if (r.futility) j["composition_futility"] = to_json(*r.futility);
  return j;
}

json to_json(const GhostReport& r) {
  json j;
  j["verdict"] = to_string(r.verdict);
  j["h_max_found"] = finite_or_null(r.h_max_found);
  j["h_min_found"] = finite_or_null(r.h_min_found);
  j["threshold"] = r.threshold;
  j["scales"] = vec(r.scales);
  if (r.witness_high) j["witness_high"] = vec(*r.witness_high);
  if (r.witness_low) j["witness_low"] = vec(*r.witness_low);
  j["samples_skipped"] = r.samples_skipped;
  j["caveat"] = r.caveat;
  return j;
}

json to_json(const RecurrenceStat& s) {
  return json{{"min_return", s.min_return},
              {"at_time", s.at_time},
              {"extent", s.extent}};
}

json to_json(const FlowStat& s) {
  json j;
  j["name"] = s.name;
  j["blowup"] = s.blowup;
  if (!s.blowup) {
    j["recurrent"] = s.recurrent;
    j["definitely_drifting"] = s.definitely_drifting;
    j["recurrence"] = to_json(s.recurrence);
    j["drift_rates"] = vec(s.drift_rates);
    j["coordinate_ranges"] = vec(s.coord_ranges);
    j["max_level_drift"] = s.max_level_drift;
  }
  return j;
}

json to_json(const LevelTopologyReport& r) {
  json j;
  j["quantities"] = r.q_names;
  j["level"] = vec(r.level);
  j["seed"] = vec(r.seed);
  j["horizon"] = r.horizon;
  j["classification"] = to_string(r.classification);
  j["k_compact"] = r.k_compact;
  j["recurrence_threshold"] = r.recurrence_threshold;
  j["drift_threshold"] = r.drift_threshold;
  json flows = json::array();
  for (const auto& f : r.flows) flows.push_back(to_json(f));
  j["flows"] = flows;
  j["dynamics_flow"] = to_json(r.dynamics_flow);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

json to_json(const IffAssessment& a) {
  json j;
  j["assessment"] = a.assessment;
  j["hypotheses_hold"] = a.hypotheses_hold;
  j["involution_pass"] = a.involution_pass;
  j["independence_pass"] = a.independence_pass;
  j["completeness_pass"] = a.completeness_pass;
  j["confining_evidence"] = a.confining_evidence;
  j["theorem_inapplicable"] = a.theorem_inapplicable;
  j["expected_rank"] = a.expected_rank;
  j["rank_deficient_points"] = a.rank_deficient_points;
  j["rank_points_checked"] = a.rank_points_checked;
  json br = json::array();
  for (const auto& b : a.brackets) br.push_back(to_json(b));
  j["brackets"] = br;
  json seeds = json::array();
  for (const auto& s : a.per_seed) seeds.push_back(to_json(s));
  j["per_seed"] = seeds;
  j["tuple_confining"] = to_json(a.tuple_confining);
  j["failures"] = a.failures;
  return j;
}

json to_json(const ExpectationResult& r) {
  json j;
  j["analysis"] = r.expectation.analysis;
  j["expected"] = r.expectation.expected;
  j["actual"] = r.actual;
  j["pass"] = r.pass;
  if (!r.detail.empty()) j["detail"] = r.detail;
  if (!r.expectation.note.empty()) j["note"] = r.expectation.note;
  return j;
}

json to_json(const AnalysisConfig& cfg) {
  json j;
  j["rtol"] = cfg.rtol;
  j["atol"] = cfg.atol;
  j["horizon"] = cfg.horizon;
  j["r_max"] = cfg.r_max;
  j["sample_count"] = cfg.sample_count;
  j["sample_half_width"] = cfg.sample_half_width;
  j["conservation_rtol"] = cfg.conservation_rtol;
  j["bracket_rtol"] = cfg.bracket_rtol;
  j["rank_rtol"] = cfg.rank_rtol;
  j["probe_scales"] = cfg.probe_scales;
  j["resolution"] = cfg.resolution;
  j["cell_budget"] = cfg.cell_budget;
  j["escape_radii"] = cfg.escape_radii;
  j["ghost_scales"] = cfg.ghost_scales;
  j["ghost_threshold"] = cfg.ghost_threshold;
  j["ghost_samples"] = cfg.ghost_samples;
  j["ghost_ascent_steps"] = cfg.ghost_ascent_steps;
  j["midpoint_tol"] = cfg.midpoint_tol;
  j["midpoint_max_sweeps"] = cfg.midpoint_max_sweeps;
  j["transient_fraction"] = cfg.transient_fraction;
  j["recurrence_threshold"] = cfg.recurrence_threshold;
  j["drift_threshold"] = cfg.drift_threshold;
  j["flow_drift_tol"] = cfg.flow_drift_tol;
  j["arnold_horizon"] = cfg.arnold_horizon;
  j["resample_count"] = cfg.resample_count;
  j["seeds"] = cfg.seeds;
  return j;
}

void merge_config(AnalysisConfig& cfg, const json& j) {
  if (!j.is_object()) throw DefinitionError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "rtol") cfg.rtol = value.get<double>();
    else if (key == "atol") cfg.atol = value.get<double>();
    else if (key == "horizon") cfg.horizon = value.get<double>();
    else if (key == "r_max") cfg.r_max = value.get<double>();
    else if (key == "sample_count") cfg.sample_count = value.get<int>();
    else if (key == "sample_half_width") cfg.sample_half_width = value.get<double>();
    else if (key == "conservation_rtol") cfg.conservation_rtol = value.get<double>();
    else if (key == "bracket_rtol") cfg.bracket_rtol = value.get<double>();
    else if (key == "rank_rtol") cfg.rank_rtol = value.get<double>();
    else if (key == "probe_scales") cfg.probe_scales = value.get<std::vector<double>>();
    else if (key == "resolution") cfg.resolution = value.get<int>();
    else if (key == "cell_budget") cfg.cell_budget = value.get<long long>();
    else if (key == "escape_radii") cfg.escape_radii = value.get<std::vector<double>>();
    else if (key == "ghost_scales") cfg.ghost_scales = value.get<std::vector<double>>();
    else if (key == "ghost_threshold") cfg.ghost_threshold = value.get<double>();
    else if (key == "ghost_samples") cfg.ghost_samples = value.get<int>();
    else if (key == "ghost_ascent_steps") cfg.ghost_ascent_steps = value.get<int>();
    else if (key == "midpoint_tol") cfg.midpoint_tol = value.get<double>();
    else if (key == "midpoint_max_sweeps") cfg.midpoint_max_sweeps = value.get<int>();
    else if (key == "transient_fraction") cfg.transient_fraction = value.get<double>();
    else if (key == "recurrence_threshold") cfg.recurrence_threshold = value.get<double>();
    else if (key == "drift_threshold") cfg.drift_threshold = value.get<double>();
    else if (key == "flow_drift_tol") cfg.flow_drift_tol = value.get<double>();
    else if (key == "arnold_horizon") cfg.arnold_horizon = value.get<double>();
    else if (key == "resample_count") cfg.resample_count = value.get<int>();
    else if (key == "seeds") cfg.seeds = value.get<std::vector<std::vector<double>>>();
    else throw DefinitionError("unknown config key '" + key + "'");
  }
}

std::string config_digest(const AnalysisConfig& cfg) {
  return fnv1a_hex(to_json(cfg).dump());
}

std::string timestamp_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

json assemble_report(const std::string& system, const std::string& command,
                     const AnalysisConfig& cfg, json certificate, json sub_reports) {
  json j;
  j["tool_version"] = kToolVersion;
  j["timestamp"] = timestamp_utc();
  j["system"] = system;
  j["command"] = command;
  j["config_digest"] = config_digest(cfg);
  j["certificate"] = std::move(certificate);
  j["sub_reports"] = std::move(sub_reports);
  return j;
}

}  // namespace stabcert
