#include "stabcert/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "stabcert/sampling.hpp"

namespace stabcert {

namespace {

std::string join(std::span<const double> v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::vector<std::vector<double>> residual_sample_points(const SystemDef& sys,
                                                        const AnalysisConfig& cfg) {
  std::vector<double> center(sys.dim(), 0.0), hw(sys.dim(), cfg.sample_half_width);
  for (int k = 0; k < sys.dim(); ++k)
    if (sys.periodic()[k]) hw[k] = std::numbers::pi;
  return halton_box(cfg.sample_count, center, hw);
}

}  // namespace

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

TrajectoryVerdict classify_trajectory(const SystemDef& sys, const Trajectory& traj,
                                      std::span<const double> escape_radii) {
  TrajectoryVerdict v;
  if (!traj.times.empty())
    v.horizon = std::abs(traj.times.back() - traj.times.front());
  for (const auto& s : traj.states)
    v.max_norm = std::max(v.max_norm, sys.escape_norm(s));

  if (traj.termination.kind == TerminationKind::Blowup) {
    v.cls = TrajectoryClass::Blowup;
    v.blowup = traj.termination.blowup;
    return v;
  }
  for (double r : escape_radii)
    if (v.max_norm >= r) v.radii_crossed.push_back(r);
  double last = escape_radii.empty() ? 1e4 : escape_radii.back();
  if (v.max_norm >= last) {
    v.cls = TrajectoryClass::EscapeNoBlowup;
    v.radius_reached = last;
  } else {
    v.cls = TrajectoryClass::Bounded;
  }
  return v;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::G1Certified: return "G1Certified";
    case Verdict::G2EvidenceNotG1: return "G2EvidenceNotG1";
    case Verdict::BlowupWitness: return "BlowupWitness";
    case Verdict::GhostEvidence: return "GhostEvidence";
    default: return "Inconclusive";
  }
}

const char* to_string(TrajectoryClass c) {
  switch (c) {
    case TrajectoryClass::Bounded: return "Bounded";
    case TrajectoryClass::EscapeNoBlowup: return "EscapeNoBlowup";
    default: return "Blowup";
  }
}

const char* to_string(GhostVerdict v) {
  switch (v) {
    case GhostVerdict::GhostEvidence: return "GhostEvidence";
    case GhostVerdict::BoundedBelowEvidence: return "BoundedBelowEvidence";
    case GhostVerdict::BoundedAboveEvidence: return "BoundedAboveEvidence";
    default: return "Inconclusive";
  }
}

Verdict derive_g1_verdict(std::span<const EvidenceEntry> evidence) {
  if (evidence.empty()) return Verdict::Inconclusive;
  bool conservation_ok = false, confining_ok = false;
  for (const auto& e : evidence) {
    if (!e.passed) return Verdict::Inconclusive;
    if (e.operation == "conservation_residual" && e.outcome == "pass")
      conservation_ok = true;
    else if (e.operation == "confining_probe" && e.outcome == "ConfiningEvidence")
      confining_ok = true;
    else
      return Verdict::Inconclusive;  // unknown or inconsistent entry
  }
  return conservation_ok && confining_ok ? Verdict::G1Certified
                                         : Verdict::Inconclusive;
}

std::vector<std::vector<double>> default_seeds(const SystemDef& sys, std::size_t count) {
  std::vector<double> center(sys.dim(), 0.0), hw(sys.dim(), 1.0);
  for (int k = 0; k < sys.dim(); ++k)
    if (sys.periodic()[k]) hw[k] = std::numbers::pi;
  return halton_box(count, center, hw);
}

CertifyReport certify_g1(const SystemDef& sys,
                         std::span<const std::vector<double>> seeds,
                         const AnalysisConfig& cfg) {
  CertifyReport report;
  Certificate& cert = report.certificate;
  cert.system = sys.name();
  cert.caveats.push_back(
      "all claims are finite-scale numerical evidence at the recorded "
      "tolerances and probe scales, not proofs");

  // candidate list; H is always enrolled first for Hamiltonian dynamics
  std::vector<NamedExpr> candidates;
  if (sys.is_hamiltonian()) candidates.push_back({"H", sys.hamiltonian().hamiltonian});
  for (const auto& q : sys.conserved_candidates()) candidates.push_back(q);
  if (candidates.empty()) {
    cert.verdict = Verdict::Inconclusive;
    cert.caveats.push_back(
        "no conserved candidates declared and no Hamiltonian to enroll; "
        "the conserved-quantity route cannot start");
    return report;
  }

  std::vector<std::vector<double>> seed_storage;
  if (seeds.empty()) {
    seed_storage = default_seeds(sys, 2);
    seeds = seed_storage;
  }

  auto points = residual_sample_points(sys, cfg);

  // stage 1: conservation residuals
  std::vector<NamedExpr> passing;
  std::vector<EvidenceEntry> conservation_entries;
  for (const auto& cand : candidates) {
    ResidualReport rr = conservation_residual(sys, cand.expr, points);
    double tol = cfg.conservation_rtol * (1.0 + rr.max_scale);
    EvidenceEntry e;
    e.claim = "X(" + cand.name + ") = 0 on the sample set";
    e.operation = "conservation_residual";
    e.inputs_digest = fnv1a_hex(sys.name() + "|" + cand.name + "|" +
                                cand.expr.render() + "|n=" +
                                std::to_string(points.size()));
    e.tolerance = tol;
    e.scale = cfg.sample_half_width;
    e.passed = rr.max_residual <= tol && rr.samples_evaluated > 0;
    e.outcome = e.passed ? "pass" : "fail";
    {
      std::ostringstream os;
      os << "max residual " << rr.max_residual << " over " << rr.samples_evaluated
         << " points";
      if (rr.samples_skipped) os << " (" << rr.samples_skipped << " skipped)";
      if (!e.passed && !rr.worst_point.empty())
        os << "; worst at (" << join(rr.worst_point) << ")";
      e.detail = os.str();
    }
    report.attempts.push_back(e);
    if (e.passed) {
      passing.push_back(cand);
      conservation_entries.push_back(e);
    }
  }

  if (passing.empty()) {
    cert.evidence = report.attempts;  // the failed residual checks
    cert.verdict = derive_g1_verdict(cert.evidence);
    cert.caveats.push_back("no candidate passed the conservation check");
    return report;
  }

  auto probe_map = [&](const std::string& label, const std::vector<NamedExpr>& qs)
      -> std::pair<EvidenceEntry, ConfiningVerdict> {
    std::vector<Expr> comps;
    comps.reserve(qs.size());
    for (const auto& q : qs) comps.push_back(q.expr);
    ScalarMap map = ScalarMap::from_system(sys, label, comps);

    std::vector<LevelSeed> targets;
    for (const auto& seed : seeds) {
      LevelSeed t;
      t.seed = seed;
      try {
        t.level = map.value_at(seed);
      } catch (const EvalError&) {
        continue;  // seed outside the candidate's domain
      }
      targets.push_back(std::move(t));
    }
    EvidenceEntry e;
    e.claim = "level components of " + label + " through the probed seeds are bounded";
    e.operation = "confining_probe";
    std::ostringstream dig;
    dig << sys.name() << "|" << label << "|seeds=" << targets.size() << "|scales=";
    for (double s : cfg.probe_scales) dig << s << ",";
    e.inputs_digest = fnv1a_hex(dig.str());
    if (targets.empty()) {
      e.passed = false;
      e.outcome = "Inconclusive";
      e.detail = "no usable seeds";
      return {e, ConfiningVerdict{}};
    }
    ConfiningVerdict v = confining_probe(map, targets, cfg.probe_scales,
                                         cfg.resolution, cfg.cell_budget);
    e.outcome = to_string(v.verdict);
    e.passed = v.verdict == Confining::ConfiningEvidence;
    e.scale = cfg.probe_scales.empty() ? 0.0 : cfg.probe_scales.back();
    std::ostringstream os;
    os << "resolution " << v.resolution << "/axis;";
    for (const auto& p : v.probes) {
      os << " [" << to_string(p.outcome);
      if (p.outcome == ComponentProbe::Outcome::BoundedComponent)
        os << " at half-width " << p.bounded_at_scale;
      os << " for level (" << join(p.target.level) << ")]";
    }
    e.detail = os.str();
    return {e, v};
  };

  // stage 2: each passing candidate alone
  std::optional<EvidenceEntry> winner;
  for (std::size_t ci = 0; ci < passing.size(); ++ci) {
    auto [entry, verdict] = probe_map(passing[ci].name, {passing[ci]});
    report.attempts.push_back(entry);
    if (entry.passed) {
      winner = entry;
      report.via = passing[ci].name;
      // only the winning candidate's conservation entry joins the chain
      cert.evidence.push_back(conservation_entries[ci]);
      break;
    }
  }

  // stage 3: the momentum-map tuple of all passing candidates
  if (!winner && passing.size() >= 2) {
    std::string label = "(";
    for (std::size_t i = 0; i < passing.size(); ++i)
      label += (i ? "," : "") + passing[i].name;
    label += ")";
    auto [entry, verdict] = probe_map(label, passing);
    report.attempts.push_back(entry);
    if (entry.passed) {
      winner = entry;
      report.via = "tuple " + label;
      cert.evidence = conservation_entries;
    } else if (verdict.verdict == Confining::NotConfiningAtScale) {
      report.futility = composition_futility(label, verdict);
    }
  } else if (!winner && passing.size() == 1) {
    // single candidate failed; its probe is the tuple probe
    for (auto it = report.attempts.rbegin(); it != report.attempts.rend(); ++it) {
      if (it->operation == "confining_probe" && it->outcome == "NotConfiningAtScale") {
        FutilityAdvisory adv;
        adv.message = "no functional combination g(" + passing[0].name +
                      ") can be confining: the probed component escapes every scale";
        report.futility = adv;
        break;
      }
    }
  }

  if (winner) {
    cert.evidence.push_back(*winner);
    cert.verdict = derive_g1_verdict(cert.evidence);
  } else {
    cert.verdict = Verdict::Inconclusive;
    cert.caveats.push_back(
        "no probed candidate or tuple produced confining evidence; G1 cannot "
        "be certified by the conserved-quantity route at these scales");
    if (report.futility) cert.caveats.push_back(report.futility->message);
  }
  return report;
}

GhostReport ghost_probe(const SystemDef& sys, const AnalysisConfig& cfg) {
  if (!sys.is_hamiltonian())
    throw DefinitionError("ghost_probe requires Hamiltonian dynamics");

  GhostReport rep;
  rep.threshold = cfg.ghost_threshold;
  rep.scales = cfg.ghost_scales;
  rep.caveat =
      "probe of the given Hamiltonian only; being ghost-ridden quantifies "
      "over all compatible Hamiltonian structures, which is not enumerable "
      "here";

  const Expr& h = sys.hamiltonian().hamiltonian;
  CompiledExpr hc = sys.compile(h);
  std::vector<Expr> grad_exprs;
  for (const auto& v : sys.variables()) grad_exprs.push_back(h.diff(v));
  auto grad = compile_all(grad_exprs, sys.variables(), sys.parameters());

  rep.h_max_found = -std::numeric_limits<double>::infinity();
  rep.h_min_found = std::numeric_limits<double>::infinity();

  auto eval_h = [&](std::span<const double> x) -> std::optional<double> {
    try {
      return hc.eval(x);
    } catch (const EvalError&) {
      ++rep.samples_skipped;
      return std::nullopt;
    }
  };

  auto note_value = [&](const std::vector<double>& x, double v) {
    if (v > rep.h_max_found) {
      rep.h_max_found = v;
      if (v > rep.threshold && !rep.witness_high) rep.witness_high = x;
    }
    if (v < rep.h_min_found) {
      rep.h_min_found = v;
      if (v < -rep.threshold && !rep.witness_low) rep.witness_low = x;
    }
  };

  // fixed-step gradient walk with backtracking; sign +1 climbs, -1 descends
  auto line_search = [&](std::vector<double> x, double sign) {
    std::vector<double> g(sys.dim()), trial(sys.dim());
    for (int it = 0; it < cfg.ghost_ascent_steps; ++it) {
      auto v0 = eval_h(x);
      if (!v0) return;
      note_value(x, *v0);
      if ((sign > 0 && *v0 > rep.threshold && rep.witness_high) ||
          (sign < 0 && *v0 < -rep.threshold && rep.witness_low))
        return;
      double gn2 = 0.0;
      try {
        for (int k = 0; k < sys.dim(); ++k) {
          g[k] = grad[k].eval(x);
          gn2 += g[k] * g[k];
        }
      } catch (const EvalError&) {
        return;
      }
      if (gn2 < 1e-24) return;  // critical point
      double xn = 0.0;
      for (double xi : x) xn = std::max(xn, std::abs(xi));
      double alpha = (1.0 + xn) / std::sqrt(gn2);
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt) {
        for (int k = 0; k < sys.dim(); ++k) trial[k] = x[k] + sign * alpha * g[k];
        auto v1 = eval_h(trial);
        if (v1 && sign * (*v1 - *v0) >= 1e-4 * alpha * gn2) {
          x = trial;
          note_value(x, *v1);
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) return;
      double nrm = 0.0;
      for (double xi : x) nrm = std::max(nrm, std::abs(xi));
      if (nrm > 1e12) return;  // far enough; values found dominate any threshold
    }
  };

  for (double scale : cfg.ghost_scales) {
    std::vector<double> center(sys.dim(), 0.0), hw(sys.dim(), scale);
    for (int k = 0; k < sys.dim(); ++k)
      if (sys.periodic()[k]) hw[k] = std::numbers::pi;
    auto samples = halton_box(cfg.ghost_samples, center, hw);

    // rank samples by H and start walks from the extremes
    std::vector<std::pair<double, std::size_t>> valued;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      auto v = eval_h(samples[i]);
      if (!v) continue;
      note_value(samples[i], *v);
      valued.emplace_back(*v, i);
    }
    std::sort(valued.begin(), valued.end());
    const std::size_t starts = std::min<std::size_t>(3, valued.size());
    for (std::size_t i = 0; i < starts; ++i) {
      if (!rep.witness_low) line_search(samples[valued[i].second], -1.0);
      if (!rep.witness_high)
        line_search(samples[valued[valued.size() - 1 - i].second], +1.0);
    }
    if (rep.witness_high && rep.witness_low) break;
  }

  if (rep.witness_high && rep.witness_low) rep.verdict = GhostVerdict::GhostEvidence;
  else if (rep.witness_high) rep.verdict = GhostVerdict::BoundedBelowEvidence;
  else if (rep.witness_low) rep.verdict = GhostVerdict::BoundedAboveEvidence;
  else rep.verdict = GhostVerdict::Inconclusive;
  return rep;
}

}  // namespace stabcert
