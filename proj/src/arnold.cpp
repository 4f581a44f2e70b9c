#include "stabcert/arnold.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stabcert/sampling.hpp"

namespace stabcert {

namespace {

SystemDef flow_system(const SystemDef& sys, const NamedExpr& q) {
  std::vector<Expr> field =
      hamiltonian_field(q.expr, sys.hamiltonian().symplectic, sys.variables());
  return SystemDef(sys.name() + "#flow_" + q.name, sys.variables(), sys.periodic(),
                   ExplicitField{std::move(field)}, {}, sys.parameters());
}

std::vector<double> sample_times(const Trajectory& traj, double transient_fraction,
                                 int resample) {
  double t0 = traj.times.front(), t1 = traj.times.back();
  double start = t0 + transient_fraction * (t1 - t0);
  std::vector<double> ts(resample);
  for (int i = 0; i < resample; ++i)
    ts[i] = start + (t1 - start) * (static_cast<double>(i) / (resample - 1));
  return ts;
}

}  // namespace

std::vector<FlowResult> symmetry_flows(const SystemDef& sys,
                                       std::span<const NamedExpr> qs,
                                       std::span<const double> x0, double T,
                                       const AnalysisConfig& cfg) {
  if (!sys.is_hamiltonian())
    throw DefinitionError("symmetry_flows requires Hamiltonian dynamics");
  if (qs.empty()) throw std::invalid_argument("symmetry_flows: no conserved quantities");

  // precondition: involution and independence at the anchor point
  const auto& s = sys.hamiltonian().symplectic;
  std::vector<double> xw = sys.wrap(x0);
  for (std::size_t i = 0; i < qs.size(); ++i)
    for (std::size_t j = i + 1; j < qs.size(); ++j) {
      double b = poisson_bracket(qs[i].expr, qs[j].expr, s, sys.variables(), xw,
                                 sys.parameters());
      if (std::abs(b) > 1e-6)
        throw std::invalid_argument("symmetry_flows: {" + qs[i].name + "," +
                                    qs[j].name + "} = " + std::to_string(b) +
                                    " at the anchor point");
    }
  if (independence_rank(sys, qs, x0, cfg.rank_rtol) < static_cast<int>(qs.size()))
    throw std::invalid_argument(
        "symmetry_flows: dQ_i are rank deficient at the anchor point");

  AdaptiveOptions opts;
  opts.rtol = cfg.rtol;
  opts.atol = cfg.atol;
  opts.r_max = cfg.r_max;

  std::vector<FlowResult> out;
  for (const auto& q : qs) {
    FlowResult fr;
    fr.q_name = q.name;
    SystemDef flow = flow_system(sys, q);
    fr.traj = integrate_adaptive(flow, x0, 0.0, T, opts);
    fr.blowup = fr.traj.termination.kind == TerminationKind::Blowup;
    if (!fr.blowup) {
      for (const auto& other : qs) {
        DriftReport dr = drift(sys, other.expr, fr.traj);
        fr.max_level_drift = std::max(fr.max_level_drift, dr.relative);
      }
      fr.drift_violation = fr.max_level_drift > cfg.flow_drift_tol;
    }
    out.push_back(std::move(fr));
  }
  return out;
}

RecurrenceStat recurrence_statistic(const SystemDef& sys, const Trajectory& traj,
                                    double transient_fraction, int resample) {
  if (traj.size() < 4)
    throw std::invalid_argument("recurrence_statistic: too few samples");
  const auto& x0 = traj.states.front();
  auto ts = sample_times(traj, transient_fraction, resample);

  RecurrenceStat stat;
  stat.min_return = std::numeric_limits<double>::infinity();
  int best = 0;
  std::vector<double> dist(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    auto x = traj.sample_at(ts[i]);
    dist[i] = sys.distance(x, x0);
    stat.extent = std::max(stat.extent, dist[i]);
    if (dist[i] < stat.min_return) {
      stat.min_return = dist[i];
      best = static_cast<int>(i);
    }
  }
  // refine around the best coarse sample on the interpolant
  double lo = ts[std::max(0, best - 1)];
  double hi = ts[std::min<int>(static_cast<int>(ts.size()) - 1, best + 1)];
  double t_best = ts[best];
  for (int it = 0; it < 80 && hi > lo; ++it) {
    double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    double d1 = sys.distance(traj.sample_at(m1), x0);
    double d2 = sys.distance(traj.sample_at(m2), x0);
    if (d1 < d2) {
      hi = m2;
      if (d1 < stat.min_return) { stat.min_return = d1; t_best = m1; }
    } else {
      lo = m1;
      if (d2 < stat.min_return) { stat.min_return = d2; t_best = m2; }
    }
  }
  stat.at_time = t_best;
  return stat;
}

std::vector<double> drift_rate(const SystemDef& sys, const Trajectory& traj,
                               double transient_fraction, int resample) {
  if (traj.size() < 4) throw std::invalid_argument("drift_rate: too few samples");
  (void)sys;  // periodic coordinates stay unwrapped in the stored states
  auto ts = sample_times(traj, transient_fraction, resample);
  const std::size_t d = traj.states.front().size();

  double tm = 0.0;
  for (double t : ts) tm += t;
  tm /= ts.size();

  std::vector<double> num(d, 0.0);
  double den = 0.0;
  std::vector<double> mean(d, 0.0);
  std::vector<std::vector<double>> xs(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    xs[i] = traj.sample_at(ts[i]);
    for (std::size_t k = 0; k < d; ++k) mean[k] += xs[i][k];
  }
  for (std::size_t k = 0; k < d; ++k) mean[k] /= ts.size();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double dt = ts[i] - tm;
    den += dt * dt;
    for (std::size_t k = 0; k < d; ++k) num[k] += dt * (xs[i][k] - mean[k]);
  }
  std::vector<double> slopes(d, 0.0);
  if (den > 0)
    for (std::size_t k = 0; k < d; ++k) slopes[k] = num[k] / den;
  return slopes;
}

const char* to_string(LevelClass c) {
  switch (c) {
    case LevelClass::TorusEvidence: return "TorusEvidence";
    case LevelClass::CylinderEvidence: return "CylinderEvidence";
    case LevelClass::IncompleteFlow: return "IncompleteFlow";
    default: return "Inconclusive";
  }
}

namespace {

FlowStat flow_statistics(const SystemDef& sys, const std::string& name,
                         const Trajectory& traj, const AnalysisConfig& cfg,
                         double T) {
  FlowStat st;
  st.name = name;
  st.blowup = traj.termination.kind == TerminationKind::Blowup;
  if (st.blowup) return st;

  st.recurrence = recurrence_statistic(sys, traj, cfg.transient_fraction,
                                       cfg.resample_count);
  st.drift_rates = drift_rate(sys, traj, cfg.transient_fraction, 4096);

  const std::size_t d = traj.states.front().size();
  st.coord_ranges.assign(d, 0.0);
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const auto& x : traj.states)
    for (std::size_t k = 0; k < d; ++k) {
      lo[k] = std::min(lo[k], x[k]);
      hi[k] = std::max(hi[k], x[k]);
    }
  for (std::size_t k = 0; k < d; ++k) st.coord_ranges[k] = hi[k] - lo[k];

  double scale = 1.0 + st.recurrence.extent;
  double rthr = cfg.recurrence_threshold * scale;
  st.recurrent = st.recurrence.min_return <= rthr;
  bool clearly_apart = st.recurrence.min_return >= 5.0 * rthr;
  double dthr = cfg.drift_threshold * scale;
  for (std::size_t k = 0; k < d; ++k) {
    if (sys.periodic()[k]) continue;  // winding on circles is recurrent motion
    if (std::abs(st.drift_rates[k]) * T > dthr && clearly_apart)
      st.definitely_drifting = true;
  }
  return st;
}

}  // namespace

LevelTopologyReport classify_level_set(const SystemDef& sys,
                                       std::span<const NamedExpr> qs,
                                       std::span<const double> x0, double T,
                                       const AnalysisConfig& cfg) {
  LevelTopologyReport rep;
  rep.seed.assign(x0.begin(), x0.end());
  rep.horizon = T;
  rep.recurrence_threshold = cfg.recurrence_threshold;
  rep.drift_threshold = cfg.drift_threshold;
  for (const auto& q : qs) {
    rep.q_names.push_back(q.name);
    rep.level.push_back(sys.compile(q.expr).eval(sys.wrap(x0)));
  }

  auto flows = symmetry_flows(sys, qs, x0, T, cfg);

  bool any_blowup = false;
  int recurrent_count = 0;
  bool any_drifting = false, any_mixed = false;
  for (const auto& fr : flows) {
    FlowStat st = flow_statistics(sys, fr.q_name, fr.traj, cfg, T);
    st.max_level_drift = fr.max_level_drift;
    any_blowup = any_blowup || st.blowup;
    if (!st.blowup) {
      if (st.recurrent) ++recurrent_count;
      else if (st.definitely_drifting) any_drifting = true;
      else any_mixed = true;
    }
    rep.flows.push_back(std::move(st));
  }

  // the dynamics flow itself, restricted to the same level set
  {
    AdaptiveOptions opts;
    opts.rtol = cfg.rtol;
    opts.atol = cfg.atol;
    opts.r_max = cfg.r_max;
    Trajectory traj = integrate_adaptive(sys, x0, 0.0, T, opts);
    rep.dynamics_flow = flow_statistics(sys, "dynamics", traj, cfg, T);
  }

  rep.k_compact = recurrent_count;
  if (any_blowup) {
    rep.classification = LevelClass::IncompleteFlow;
    rep.note =
        "a symmetry flow blows up: the integrability theorem does not apply "
        "on this level set";
  } else if (any_mixed) {
    rep.classification = LevelClass::Inconclusive;
    rep.note = "recurrence statistics are near threshold; refine T or tolerances";
  } else if (recurrent_count == static_cast<int>(flows.size())) {
    rep.classification = LevelClass::TorusEvidence;
  } else if (any_drifting) {
    rep.classification = LevelClass::CylinderEvidence;
    rep.note = "rectilinear drift along " +
               std::to_string(static_cast<int>(flows.size()) - recurrent_count) +
               " non-compact direction(s)";
  } else {
    rep.classification = LevelClass::Inconclusive;
  }
  return rep;
}

IffAssessment iff_assessment(const SystemDef& sys, std::span<const NamedExpr> qs,
                             std::span<const std::vector<double>> seeds, double T,
                             const AnalysisConfig& cfg) {
  if (!sys.is_hamiltonian())
    throw DefinitionError("iff_assessment requires Hamiltonian dynamics");
  const int n = sys.dim() / 2;
  if (static_cast<int>(qs.size()) != n)
    throw std::invalid_argument("iff_assessment needs exactly n = dim/2 candidates");

  IffAssessment out;
  out.expected_rank = n;

  std::vector<double> center(sys.dim(), 0.0), hw(sys.dim(), cfg.sample_half_width);
  auto points = halton_box(cfg.sample_count, center, hw);

  out.brackets = involution_report(sys, qs, points, cfg.bracket_rtol);
  out.involution_pass = true;
  for (const auto& b : out.brackets) {
    out.involution_pass = out.involution_pass && b.pass;
    if (!b.pass)
      out.failures.push_back("involution fails for {" + b.name_i + "," + b.name_j +
                             "}: max " + std::to_string(b.max_abs));
  }

  // independence at sampled points (certified only as such)
  for (const auto& p : points) {
    int rank;
    try {
      rank = independence_rank(sys, qs, p, cfg.rank_rtol);
    } catch (const EvalError&) {
      continue;
    }
    ++out.rank_points_checked;
    if (rank < n) ++out.rank_deficient_points;
  }
  out.independence_pass = out.rank_points_checked > 0 && out.rank_deficient_points == 0;
  if (!out.independence_pass)
    out.failures.push_back("rank deficiency at " +
                           std::to_string(out.rank_deficient_points) + " of " +
                           std::to_string(out.rank_points_checked) +
                           " sampled points");

  std::vector<std::vector<double>> seed_storage;
  if (seeds.empty()) {
    seed_storage = default_seeds(sys, 2);
    seeds = seed_storage;
  }

  out.completeness_pass = true;
  for (const auto& seed : seeds) {
    LevelTopologyReport rep = classify_level_set(sys, qs, seed, T, cfg);
    if (rep.classification == LevelClass::IncompleteFlow) out.completeness_pass = false;
    out.per_seed.push_back(std::move(rep));
  }
  if (!out.completeness_pass)
    out.failures.push_back("a symmetry flow blew up on a probed level set");

  // confining probe of the full tuple
  {
    std::vector<Expr> comps;
    std::string label = "(";
    for (std::size_t i = 0; i < qs.size(); ++i) {
      comps.push_back(qs[i].expr);
      label += (i ? "," : "") + qs[i].name;
    }
    label += ")";
    ScalarMap map = ScalarMap::from_system(sys, label, comps);
    std::vector<LevelSeed> targets;
    for (const auto& seed : seeds) {
      LevelSeed t;
      t.seed = seed;
      t.level = map.value_at(seed);
      targets.push_back(std::move(t));
    }
    out.tuple_confining = confining_probe(map, targets, cfg.probe_scales,
                                          cfg.resolution, cfg.cell_budget);
  }
  out.confining_evidence = out.tuple_confining.verdict == Confining::ConfiningEvidence;

  out.hypotheses_hold = out.involution_pass && out.independence_pass &&
                        out.completeness_pass;
  out.theorem_inapplicable = !out.completeness_pass;

  std::ostringstream os;
  if (out.theorem_inapplicable) {
    os << "integrability hypotheses fail: a symmetry flow is incomplete (blow-up); "
          "the torus/cylinder alternative does not apply";
  } else if (!out.hypotheses_hold) {
    os << "integrability hypotheses fail at probed scale; see itemized failures";
  } else {
    os << "hypotheses hold at probed scale: G1 stability is equivalent to an "
          "invariant confining map; confining evidence for the tuple: "
       << (out.confining_evidence ? "yes" : "no");
    if (!out.confining_evidence &&
        out.tuple_confining.verdict == Confining::NotConfiningAtScale)
      os << " (not G1: rectilinear drift on cylinders)";
  }
  out.assessment = os.str();
  return out;
}

}  // namespace stabcert
