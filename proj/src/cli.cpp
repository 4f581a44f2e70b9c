#include "stabcert/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "stabcert/report.hpp"
#include "stabcert/sysfile.hpp"

namespace stabcert {

namespace {

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw CLI::ValidationError("expected comma-separated numbers");
  return out;
}

struct Common {
  std::string config_path;
  std::string out_path;
  double rtol = 0, atol = 0, horizon = 0;
  std::vector<double> scales;
  int resolution = -1;
  int samples = 0;
  std::vector<std::string> seed_specs;

  CLI::Option *rtol_opt = nullptr, *atol_opt = nullptr, *t_opt = nullptr,
              *scales_opt = nullptr, *res_opt = nullptr, *samples_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flags override it)");
    cmd->add_option("--out", out_path, "write the JSON report here instead of stdout");
    rtol_opt = cmd->add_option("--rtol", rtol, "integrator relative tolerance");
    atol_opt = cmd->add_option("--atol", atol, "integrator absolute tolerance");
    t_opt = cmd->add_option("--t", horizon, "time horizon");
    scales_opt = cmd->add_option_function<std::string>(
        "--scales", [this](const std::string& s) { scales = parse_doubles(s); },
        "probe half-width schedule, e.g. 2,8,32");
    res_opt = cmd->add_option("--resolution", resolution, "cells per axis");
    samples_opt = cmd->add_option("--samples", samples, "sample-point count");
    cmd->add_option("--seed", seed_specs,
                    "analysis seed state as comma-separated numbers (repeatable)");
  }

  AnalysisConfig build() const {
    AnalysisConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw DefinitionError("cannot open config file '" + config_path + "'");
      json j;
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw DefinitionError(std::string("config file is not valid JSON: ") + e.what());
      }
      merge_config(cfg, j);
    }
    if (rtol_opt && rtol_opt->count()) cfg.rtol = rtol;
    if (atol_opt && atol_opt->count()) cfg.atol = atol;
    if (t_opt && t_opt->count()) cfg.horizon = horizon;
    if (scales_opt && scales_opt->count()) cfg.probe_scales = scales;
    if (res_opt && res_opt->count()) cfg.resolution = resolution;
    if (samples_opt && samples_opt->count()) cfg.sample_count = samples;
    for (const auto& s : seed_specs) cfg.seeds.push_back(parse_doubles(s));
    return cfg;
  }

  void emit(const json& report) const {
    std::string text = report.dump(2);
    text.push_back('\n');
    if (out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(out_path);
      if (!out) throw std::runtime_error("cannot write report to '" + out_path + "'");
      out << text;
    }
  }
};

std::vector<std::vector<double>> analysis_seeds(const SystemDef& sys,
                                                const std::string& sys_arg,
                                                const AnalysisConfig& cfg) {
  if (!cfg.seeds.empty()) return cfg.seeds;
  if (const CorpusEntry* e = corpus_find(sys_arg); e && !e->seeds.empty())
    return e->seeds;
  return default_seeds(sys, 2);
}

ScalarMap resolve_map(const SystemDef& sys, const std::string& spec) {
  std::vector<Expr> comps;
  std::string label = spec;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "H" && sys.is_hamiltonian()) {
      comps.push_back(sys.hamiltonian().hamiltonian);
      continue;
    }
    bool found = false;
    for (const auto& q : sys.conserved_candidates())
      if (q.name == tok) {
        comps.push_back(q.expr);
        found = true;
        break;
      }
    if (!found) {
      try {
        comps.push_back(Expr::parse(tok));  // inline expression over the chart
      } catch (const ParseError& e) {
        throw DefinitionError("--map '" + tok + "' is neither a conserved name nor a "
                              "parsable expression: " + e.what());
      }
    }
  }
  if (comps.empty()) throw DefinitionError("--map resolved to no components");
  return ScalarMap::from_system(sys, label, std::move(comps));
}

AdaptiveOptions adaptive_options(const AnalysisConfig& cfg) {
  AdaptiveOptions opts;
  opts.rtol = cfg.rtol;
  opts.atol = cfg.atol;
  opts.r_max = cfg.r_max;
  return opts;
}

Certificate trajectory_certificate(const SystemDef& sys, const TrajectoryVerdict& v,
                                   const AnalysisConfig& cfg) {
  Certificate cert;
  cert.system = sys.name();
  cert.timestamp = timestamp_utc();
  EvidenceEntry e;
  e.claim = "empirical orbit classification over the integration horizon";
  e.operation = "classify_trajectory";
  e.inputs_digest = fnv1a_hex(sys.name() + "|T=" + std::to_string(v.horizon) +
                              "|rtol=" + std::to_string(cfg.rtol));
  e.outcome = to_string(v.cls);
  e.passed = true;
  e.scale = v.horizon;
  cert.evidence.push_back(e);
  switch (v.cls) {
    case TrajectoryClass::Blowup:
      cert.verdict = Verdict::BlowupWitness;
      break;
    case TrajectoryClass::EscapeNoBlowup:
      cert.verdict = Verdict::G2EvidenceNotG1;
      cert.caveats.push_back(
          "escape beyond the last schedule radius without blow-up: evidence "
          "against G1 at this horizon, not a completeness proof");
      break;
    case TrajectoryClass::Bounded:
      cert.verdict = Verdict::Inconclusive;
      cert.caveats.push_back(
          "orbit stayed bounded over the probed horizon; boundedness at a "
          "finite horizon certifies nothing, use `certify` for the "
          "conserved-quantity route");
      break;
  }
  return cert;
}

int cmd_simulate(const std::string& sys_arg, const Common& common,
                 const std::vector<double>& x0v, bool backward,
                 const std::string& csv_path) {
  AnalysisConfig cfg = common.build();
  SystemDef sys = resolve_system(sys_arg);
  std::vector<double> x0 = x0v;
  if (x0.empty()) x0 = analysis_seeds(sys, sys_arg, cfg).front();

  double t1 = backward ? -cfg.horizon : cfg.horizon;
  Trajectory traj = integrate_adaptive(sys, x0, 0.0, t1, adaptive_options(cfg));

  json sub;
  sub["kind"] = "trajectory";
  sub["x0"] = x0;
  sub["t0"] = 0.0;
  sub["t1"] = t1;
  sub["rtol"] = cfg.rtol;
  sub["atol"] = cfg.atol;
  sub["samples"] = traj.size();
  sub["final_t"] = traj.times.back();
  sub["final_state"] = traj.states.back();
  sub["termination"] = to_json(traj.termination);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write CSV to '" + csv_path + "'");
    traj.write_csv(csv, sys.variables());
    sub["trajectory_csv"] = csv_path;
  }
  common.emit(assemble_report(sys.name(), "simulate", cfg, nullptr,
                              json::array({sub})));
  return 0;
}

int cmd_certify(const std::string& sys_arg, const Common& common) {
  AnalysisConfig cfg = common.build();
  SystemDef sys = resolve_system(sys_arg);
  auto seeds = analysis_seeds(sys, sys_arg, cfg);
  CertifyReport rep = certify_g1(sys, seeds, cfg);
  rep.certificate.timestamp = timestamp_utc();
  json sub = to_json(rep);
  sub["kind"] = "certify_g1";
  common.emit(assemble_report(sys.name(), "certify", cfg,
                              to_json(rep.certificate), json::array({sub})));
  return 0;
}

int cmd_classify(const std::string& sys_arg, const Common& common,
                 const std::vector<double>& x0v, bool backward) {
  AnalysisConfig cfg = common.build();
  SystemDef sys = resolve_system(sys_arg);
  std::vector<double> x0 = x0v;
  if (x0.empty()) x0 = analysis_seeds(sys, sys_arg, cfg).front();

  double t1 = backward ? -cfg.horizon : cfg.horizon;
  Trajectory traj = integrate_adaptive(sys, x0, 0.0, t1, adaptive_options(cfg));
  TrajectoryVerdict v = classify_trajectory(sys, traj, cfg.escape_radii);
  Certificate cert = trajectory_certificate(sys, v, cfg);

  json sub = to_json(v);
  sub["kind"] = "classify_trajectory";
  sub["x0"] = x0;
  sub["escape_radii"] = cfg.escape_radii;
  sub["termination"] = to_json(traj.termination);
  common.emit(assemble_report(sys.name(), "classify", cfg, to_json(cert),
                              json::array({sub})));
  return 0;
}

int cmd_levelset(const std::string& sys_arg, const Common& common,
                 const std::string& map_spec, const std::vector<double>& mu,
                 const std::vector<double>& seed, const std::string& cells_csv) {
  AnalysisConfig cfg = common.build();
  SystemDef sys = resolve_system(sys_arg);
  ScalarMap map = resolve_map(sys, map_spec);

  std::vector<double> seed_state = seed;
  if (seed_state.empty()) seed_state = analysis_seeds(sys, sys_arg, cfg).front();
  std::vector<double> level = mu.empty() ? map.value_at(seed_state) : mu;

  std::vector<LevelSeed> targets{{level, seed_state}};
  ConfiningVerdict v = confining_probe(map, targets, cfg.probe_scales, cfg.resolution,
                                       cfg.cell_budget);
  json sub = to_json(v);
  sub["kind"] = "confining_probe";
  sub["map"] = map.name;

  if (!cells_csv.empty() && !v.probes.empty() && !v.probes[0].attempts.empty()) {
    const ComponentReport& last = v.probes[0].attempts.back();
    ProbeBox box = ProbeBox::centered(map.dim(), last.scale,
                                      last.resolution, map.periodic);
    for (std::size_t k = 0; k < map.dim(); ++k)
      if (!map.periodic[k]) box.center[k] = seed_state[k];
    std::ofstream csv(cells_csv);
    if (!csv) throw std::runtime_error("cannot write CSV to '" + cells_csv + "'");
    component_flood_fill(map, level, seed_state, box, cfg.cell_budget, &csv);
    sub["cells_csv"] = cells_csv;
  }
  if (auto adv = composition_futility(map.name, v))
    sub["composition_futility"] = to_json(*adv);
  common.emit(assemble_report(sys.name(), "levelset", cfg, nullptr,
                              json::array({sub})));
  return 0;
}

int cmd_properness(const std::string& sys_arg, const Common& common,
                   const std::string& map_spec, const std::vector<double>& k_interval,
                   bool with_sos) {
  AnalysisConfig cfg = common.build();
  SystemDef sys = resolve_system(sys_arg);
  ScalarMap map = resolve_map(sys, map_spec);
  if (k_interval.size() != 2)
    throw DefinitionError("--K expects exactly two numbers a,b");

  std::vector<double> lo(map.r(), k_interval[0]), hi(map.r(), k_interval[1]);
  PropernessVerdict v = properness_probe(map, lo, hi, cfg.probe_scales,
                                         cfg.resolution, cfg.cell_budget);
  json subs = json::array();
  json sub = to_json(v);
  sub["kind"] = "properness_probe";
  sub["map"] = map.name;
  if (auto adv = composition_futility(map.name, v))
    sub["composition_futility"] = to_json(*adv);
  subs.push_back(sub);

  if (with_sos) {
    SosEquivalenceReport rep = sum_of_squares_equivalence(map, cfg.probe_scales,
                                                          cfg.resolution,
                                                          cfg.cell_budget);
    json sj = to_json(rep);
    sj["kind"] = "sum_of_squares_equivalence";
    sj["map"] = map.name;
    subs.push_back(sj);
  }
  common.emit(assemble_report(sys.name(), "properness", cfg, nullptr, subs));
  return 0;
}

int cmd_brackets(const std::string& sys_arg, const Common& common) {
  AnalysisConfig cfg = common.build();
  SystemDef sys = resolve_system(sys_arg);
  if (!sys.is_hamiltonian())
    throw DefinitionError("brackets requires Hamiltonian dynamics");

  std::vector<NamedExpr> qs;
  qs.push_back({"H", sys.hamiltonian().hamiltonian});
  for (const auto& q : sys.conserved_candidates()) qs.push_back(q);

  std::vector<double> center(sys.dim(), 0.0), hw(sys.dim(), cfg.sample_half_width);
  auto points = halton_box(cfg.sample_count, center, hw);
  auto brackets = involution_report(sys, qs, points, cfg.bracket_rtol);

  json sub;
  sub["kind"] = "brackets";
  json br = json::array();
  for (const auto& b : brackets) br.push_back(to_json(b));
  sub["brackets"] = br;

  // rank summary at the analysis seeds
  json ranks = json::array();
  for (const auto& seed : analysis_seeds(sys, sys_arg, cfg)) {
    json r;
    r["point"] = seed;
    r["rank"] = independence_rank(sys, sys.conserved_candidates().empty()
                                           ? std::span<const NamedExpr>(qs)
                                           : std::span<const NamedExpr>(
                                                 sys.conserved_candidates()),
                                  seed, cfg.rank_rtol);
    ranks.push_back(r);
  }
  sub["independence_ranks"] = ranks;
  common.emit(assemble_report(sys.name(), "brackets", cfg, nullptr,
                              json::array({sub})));
  return 0;
}

int cmd_arnold(const std::string& sys_arg, const Common& common,
               const std::vector<double>& x0v) {
  AnalysisConfig cfg = common.build();
  SystemDef sys = resolve_system(sys_arg);
  if (!sys.is_hamiltonian())
    throw DefinitionError("arnold requires Hamiltonian dynamics");
  const auto& qs = sys.conserved_candidates();
  if (qs.empty())
    throw DefinitionError("arnold requires declared conserved candidates");

  auto seeds = analysis_seeds(sys, sys_arg, cfg);
  if (!x0v.empty()) seeds = {x0v};
  double T = cfg.arnold_horizon;

  json subs = json::array();
  for (const auto& seed : seeds) {
    LevelTopologyReport rep = classify_level_set(sys, qs, seed, T, cfg);
    json sj = to_json(rep);
    sj["kind"] = "level_topology";
    subs.push_back(sj);
  }
  if (static_cast<int>(qs.size()) == sys.dim() / 2) {
    IffAssessment a = iff_assessment(sys, qs, seeds, T, cfg);
    json sj = to_json(a);
    sj["kind"] = "iff_assessment";
    subs.push_back(sj);
  }
  common.emit(assemble_report(sys.name(), "arnold", cfg, nullptr, subs));
  return 0;
}

int cmd_ghost(const std::string& sys_arg, const Common& common) {
  AnalysisConfig cfg = common.build();
  SystemDef sys = resolve_system(sys_arg);
  GhostReport rep = ghost_probe(sys, cfg);

  Certificate cert;
  cert.system = sys.name();
  cert.timestamp = timestamp_utc();
  cert.verdict = rep.verdict == GhostVerdict::GhostEvidence ? Verdict::GhostEvidence
                                                            : Verdict::Inconclusive;
  EvidenceEntry e;
  e.claim = "unboundedness witnesses for H in both directions";
  e.operation = "ghost_probe";
  e.inputs_digest = fnv1a_hex(sys.name() + "|thr=" + std::to_string(rep.threshold));
  e.outcome = to_string(rep.verdict);
  e.passed = rep.verdict == GhostVerdict::GhostEvidence;
  e.tolerance = rep.threshold;
  e.scale = rep.scales.empty() ? 0.0 : rep.scales.back();
  cert.evidence.push_back(e);
  cert.caveats.push_back(rep.caveat);

  json sub = to_json(rep);
  sub["kind"] = "ghost_probe";
  common.emit(assemble_report(sys.name(), "ghost", cfg, to_json(cert),
                              json::array({sub})));
  return 0;
}

int cmd_corpus(const std::string& action, const std::string& id, const Common& common) {
  if (action == "list") {
    for (const auto& e : corpus_entries())
      std::cout << e.id << "  -  " << e.summary << "\n";
    return 0;
  }
  if (action == "show") {
    const CorpusEntry* e = corpus_find(id);
    if (!e) throw DefinitionError("unknown corpus id '" + id + "'");
    std::cout << e->id << "\n  " << e->summary << "\n";
    if (!e->default_params.empty()) {
      std::cout << "  parameters:";
      for (const auto& [k, v] : e->default_params) std::cout << " " << k << "=" << v;
      std::cout << "\n";
    }
    std::cout << "  expected behaviors:\n";
    for (const auto& x : e->expectations) {
      std::cout << "    " << x.analysis << " -> " << x.expected;
      if (!x.note.empty()) std::cout << "  (" << x.note << ")";
      std::cout << "\n";
    }
    return 0;
  }
  if (action == "run-all") {
    AnalysisConfig cfg = common.build();
    json subs = json::array();
    bool all_pass = true;
    for (const auto& e : corpus_entries()) {
      json entry;
      entry["kind"] = "corpus_expectations";
      entry["id"] = e.id;
      json results = json::array();
      for (const auto& r : run_expectations(e, cfg)) {
        results.push_back(to_json(r));
        all_pass = all_pass && r.pass;
      }
      entry["results"] = results;
      subs.push_back(entry);
    }
    json report = assemble_report("corpus", "corpus run-all", cfg, nullptr, subs);
    report["all_pass"] = all_pass;
    common.emit(report);
    return 0;
  }
  throw CLI::ValidationError("corpus action must be list, show or run-all");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"numerical global-stability analyses for dynamical systems"};
  app.require_subcommand(1);

  std::string sys_arg, map_spec, cells_csv, csv_path, corpus_action, corpus_id;
  std::vector<double> x0, mu, seed, k_interval;
  bool backward = false, with_sos = false;

  auto add_sys = [&](CLI::App* cmd) {
    cmd->add_option("sys", sys_arg, "corpus id or definition-file path")->required();
  };

  Common c_simulate, c_certify, c_classify, c_levelset, c_properness, c_brackets,
      c_arnold, c_ghost, c_corpus;

  CLI::App* simulate = app.add_subcommand("simulate", "integrate and export a trajectory");
  add_sys(simulate);
  simulate->add_option_function<std::string>(
      "--x0", [&](const std::string& s) { x0 = parse_doubles(s); }, "initial state");
  simulate->add_flag("--backward", backward, "integrate backward in time");
  simulate->add_option("--csv", csv_path, "trajectory CSV output path");
  c_simulate.attach(simulate);

  CLI::App* certify = app.add_subcommand("certify", "conserved-quantity G1 certification");
  add_sys(certify);
  c_certify.attach(certify);

  CLI::App* classify = app.add_subcommand("classify", "empirical bounded/escape/blow-up verdict");
  add_sys(classify);
  classify->add_option_function<std::string>(
      "--x0", [&](const std::string& s) { x0 = parse_doubles(s); }, "initial state");
  classify->add_flag("--backward", backward, "integrate backward in time");
  c_classify.attach(classify);

  CLI::App* levelset = app.add_subcommand("levelset", "bounded-component probe of a map level set");
  add_sys(levelset);
  levelset->add_option("--map", map_spec, "conserved-candidate name(s), H, or expression")
      ->required();
  levelset->add_option_function<std::string>(
      "--mu", [&](const std::string& s) { mu = parse_doubles(s); }, "level value(s)");
  levelset->add_option_function<std::string>(
      "--seed", [&](const std::string& s) { seed = parse_doubles(s); },
      "seed state on the level set");
  levelset->add_option("--cells-csv", cells_csv, "dump the cell grid of the last probe");
  c_levelset.attach(levelset);

  CLI::App* properness = app.add_subcommand("properness", "preimage-compactness probe");
  add_sys(properness);
  properness->add_option("--map", map_spec, "conserved-candidate name(s), H, or expression")
      ->required();
  properness->add_option_function<std::string>(
      "--K", [&](const std::string& s) { k_interval = parse_doubles(s); },
      "compact window a,b applied to every component")
      ->required();
  properness->add_flag("--sos", with_sos, "also run the sum-of-squares equivalence check");
  c_properness.attach(properness);

  CLI::App* brackets = app.add_subcommand("brackets", "involution and independence report");
  add_sys(brackets);
  c_brackets.attach(brackets);

  CLI::App* arnold = app.add_subcommand("arnold", "level-set topology and integrability assessment");
  add_sys(arnold);
  arnold->add_option_function<std::string>(
      "--x0", [&](const std::string& s) { x0 = parse_doubles(s); }, "level-set anchor state");
  c_arnold.attach(arnold);

  CLI::App* ghost = app.add_subcommand("ghost", "two-sided unboundedness probe of H");
  add_sys(ghost);
  c_ghost.attach(ghost);

  CLI::App* corpus = app.add_subcommand("corpus", "built-in example systems");
  corpus->add_option("action", corpus_action, "list | show | run-all")->required();
  corpus->add_option("id", corpus_id, "entry id (for show)");
  c_corpus.attach(corpus);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // --help is code 0; any parse failure is usage error
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sys_arg, c_simulate, x0, backward, csv_path);
    if (certify->parsed()) return cmd_certify(sys_arg, c_certify);
    if (classify->parsed()) return cmd_classify(sys_arg, c_classify, x0, backward);
    if (levelset->parsed()) return cmd_levelset(sys_arg, c_levelset, map_spec, mu, seed, cells_csv);
    if (properness->parsed()) return cmd_properness(sys_arg, c_properness, map_spec, k_interval, with_sos);
    if (brackets->parsed()) return cmd_brackets(sys_arg, c_brackets);
    if (arnold->parsed()) return cmd_arnold(sys_arg, c_arnold, x0);
    if (ghost->parsed()) return cmd_ghost(sys_arg, c_ghost);
    if (corpus->parsed()) return cmd_corpus(corpus_action, corpus_id, c_corpus);
  } catch (const DefinitionError& e) {
    std::cerr << "definition error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "expression error: " << e.what() << " (offset " << e.offset << ")\n";
    return 2;
  } catch (const BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 3;
  } catch (const IntegrationError& e) {
    std::cerr << "integration failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

}  // namespace stabcert
