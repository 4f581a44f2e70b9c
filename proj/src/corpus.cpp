#include "stabcert/corpus.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "stabcert/arnold.hpp"
#include "stabcert/classify.hpp"
#include "stabcert/sampling.hpp"

namespace stabcert {

namespace {

constexpr double kPi = std::numbers::pi;

double get_param(const std::map<std::string, double>& params, const std::string& key,
                 double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

// Best rational approximation by continued fractions; a slope this close
// to a small fraction makes every orbit of the torus flow periodic.
bool looks_rational(double alpha, long max_den, long* p_out, long* q_out) {
  double x = alpha;
  long p0 = 1, q0 = 0, p1 = static_cast<long>(std::floor(x)), q1 = 1;
  x -= std::floor(x);
  for (int it = 0; it < 64 && q1 <= max_den; ++it) {
    if (std::abs(alpha - static_cast<double>(p1) / q1) <
        1e-12 * std::max(1.0, std::abs(alpha))) {
      *p_out = p1;
      *q_out = q1;
      return true;
    }
    if (x < 1e-15) break;
    x = 1.0 / x;
    long a = static_cast<long>(std::floor(x));
    x -= std::floor(x);
    long p2 = a * p1 + p0, q2 = a * q1 + q0;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
  }
  return false;
}

std::vector<CorpusEntry> build_entries() {
  std::vector<CorpusEntry> entries;

  {
    CorpusEntry e;
    e.id = "harmonic_oscillator";
    e.summary = "field (v, -q) with H = (q^2 + v^2)/2; every orbit is a circle";
    e.seeds = {{1.0, 0.0}};
    e.expectations = {
        {"certify", "G1Certified", {}, 0, false, "", {}, {}, {}, "H", ""},
        {"classify", "Bounded", {1.0, 0.0}, 1000.0, false, "", {}, {}, {}, "", ""},
        {"ghost", "BoundedBelowEvidence", {}, 0, false, "", {}, {}, {}, "", ""},
        {"confining", "ConfiningEvidence", {}, 0, false, "H", {}, {}, {}, "", ""},
    };
    entries.push_back(std::move(e));
  }
  {
    CorpusEntry e;
    e.id = "free_particle";
    e.summary = "field (v, 0) with H = v^2/2; straight-line escape, no blow-up";
    e.seeds = {{0.0, 1.0}};
    e.expectations = {
        {"classify", "EscapeNoBlowup", {0.0, 1.0}, 1e5, false, "", {}, {}, {}, "", ""},
        {"certify", "Inconclusive", {}, 0, false, "", {}, {}, {}, "", ""},
        {"confining", "NotConfiningAtScale", {}, 0, false, "H", {}, {}, {}, "", ""},
        {"ghost", "BoundedBelowEvidence", {}, 0, false, "", {}, {}, {}, "", ""},
    };
    entries.push_back(std::move(e));
  }
  {
    CorpusEntry e;
    e.id = "quadratic_blowup";
    e.summary = "field (v, q^2); the backward orbit through (6, -12) leaves in "
                "finite time";
    e.seeds = {{6.0, -12.0}};
    e.expectations = {
        {"classify", "Blowup", {6.0, -12.0}, 10.0, true, "", {}, {}, {}, "",
         "t_est near -1, q-exponent near 2"},
    };
    entries.push_back(std::move(e));
  }
  {
    CorpusEntry e;
    e.id = "sin_r2";
    e.summary = "map-only entry f = sin(x^2 + y^2): level components are "
                "circles, preimages of compacta are unbounded";
    double s0 = std::sqrt(kPi), s1 = std::sqrt(kPi / 6.0), s2 = std::sqrt(kPi / 2.0);
    Expectation conf{"confining", "ConfiningEvidence", {}, 0, false, "f",
                     {{{0.0}, {s0, 0.0}}, {{0.5}, {s1, 0.0}}, {{1.0}, {s2, 0.0}}},
                     {}, {}, "", ""};
    Expectation prop{"properness", "NotProperEvidence", {}, 0, false, "f",
                     {}, {-1.0}, {1.0}, "", ""};
    e.expectations = {conf, prop};
    entries.push_back(std::move(e));
  }
  {
    CorpusEntry e;
    e.id = "kronecker";
    e.summary = "field (1, alpha) on the torus; dense orbits for irrational "
                "slope, no nonconstant conserved quantity";
    e.default_params = {{"alpha", std::numbers::sqrt2}};
    e.seeds = {{0.3, 1.1}};
    e.expectations = {
        {"classify", "Bounded", {0.3, 1.1}, 1000.0, false, "", {}, {}, {}, "", ""},
    };
    entries.push_back(std::move(e));
  }
  {
    CorpusEntry e;
    e.id = "pais_uhlenbeck";
    e.summary = "two decoupled oscillators with opposite-sign energies, "
                "H = Q1 - Q2; the ghost exemplar";
    e.default_params = {{"w1", 1.0}, {"w2", 2.0}};
    e.seeds = {{0.4, 0.3, 0.8, 0.6}};
    e.expectations = {
        {"ghost", "GhostEvidence", {}, 0, false, "", {}, {}, {}, "", ""},
        {"certify", "G1Certified", {}, 0, false, "", {}, {}, {}, "tuple",
         "not via H alone: the indefinite energy has unbounded level sets"},
        {"brackets", "pass", {}, 0, false, "", {}, {}, {}, "", ""},
        {"classify", "Bounded", {0.4, 0.3, 0.8, 0.6}, 1000.0, false, "", {}, {}, {},
         "", ""},
    };
    entries.push_back(std::move(e));
  }
  {
    CorpusEntry e;
    e.id = "oscillator_pair";
    e.summary = "H = H1 + H2, two uncoupled oscillators; generic level sets "
                "are 2-tori";
    e.default_params = {{"w1", 1.0}, {"w2", 1.0}};
    e.seeds = {{1.0, 0.5, 0.0, 0.8}};
    e.expectations = {
        {"arnold", "TorusEvidence", {}, 0, false, "", {}, {}, {}, "", ""},
        {"certify", "G1Certified", {}, 0, false, "", {}, {}, {}, "", ""},
        {"brackets", "pass", {}, 0, false, "", {}, {}, {}, "", ""},
    };
    entries.push_back(std::move(e));
  }
  {
    CorpusEntry e;
    e.id = "particle_oscillator";
    e.summary = "H = p1^2/2 + (p2^2 + q2^2)/2; free direction times circle, "
                "level sets are cylinders";
    e.seeds = {{0.0, 0.7, 1.0, 0.2}};
    e.expectations = {
        {"arnold", "CylinderEvidence", {}, 0, false, "", {}, {}, {}, "",
         "k = 1, drift rate = initial p1"},
        {"certify", "Inconclusive", {}, 0, false, "", {}, {}, {}, "",
         "no confining combination exists"},
    };
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace

const std::vector<CorpusEntry>& corpus_entries() {
  static const std::vector<CorpusEntry> entries = build_entries();
  return entries;
}

const CorpusEntry* corpus_find(const std::string& id) {
  for (const auto& e : corpus_entries())
    if (e.id == id) return &e;
  return nullptr;
}

SystemDef builtin(const std::string& id, const std::map<std::string, double>& params,
                  std::vector<std::string>* warnings) {
  if (id == "harmonic_oscillator") {
    return SystemDef("harmonic_oscillator", {"q", "v"}, {false, false},
                     HamiltonianDynamics{Expr::parse("(q^2 + v^2)/2"),
                                         SymplecticStructure::canonical(1)});
  }
  if (id == "free_particle") {
    return SystemDef("free_particle", {"q", "v"}, {false, false},
                     HamiltonianDynamics{Expr::parse("v^2/2"),
                                         SymplecticStructure::canonical(1)});
  }
  if (id == "quadratic_blowup") {
    return SystemDef("quadratic_blowup", {"q", "v"}, {false, false},
                     ExplicitField{{Expr::parse("v"), Expr::parse("q^2")}});
  }
  if (id == "sin_r2") {
    return SystemDef("sin_r2", {"x", "y"}, {false, false},
                     ExplicitField{{Expr::constant(0.0), Expr::constant(0.0)}},
                     {{"f", Expr::parse("sin(x^2 + y^2)")}});
  }
  if (id == "kronecker") {
    double alpha = get_param(params, "alpha", std::numbers::sqrt2);
    long p = 0, q = 0;
    if (warnings && looks_rational(alpha, 10000, &p, &q)) {
      std::ostringstream os;
      os << "slope alpha = " << alpha << " is (close to) rational " << p << "/" << q
         << ": orbits are periodic, not dense";
      warnings->push_back(os.str());
    }
    return SystemDef("kronecker", {"th1", "th2"}, {true, true},
                     ExplicitField{{Expr::constant(1.0), Expr::variable("alpha")}},
                     {}, {{"alpha", alpha}});
  }
  if (id == "pais_uhlenbeck") {
    double w1 = get_param(params, "w1", 1.0);
    double w2 = get_param(params, "w2", 2.0);
    if (w1 <= 0.0 || w2 <= 0.0)
      throw DefinitionError("pais_uhlenbeck: frequencies must be positive");
    if (w1 == w2)
      throw DefinitionError(
          "pais_uhlenbeck: equal frequencies are excluded (resonant, "
          "non-diagonalizable)");
    return SystemDef(
        "pais_uhlenbeck", {"q1", "q2", "p1", "p2"}, {false, false, false, false},
        HamiltonianDynamics{
            Expr::parse("(p1^2 + w1^2*q1^2)/2 - (p2^2 + w2^2*q2^2)/2"),
            SymplecticStructure::canonical(2)},
        {{"Q1", Expr::parse("(p1^2 + w1^2*q1^2)/2")},
         {"Q2", Expr::parse("(p2^2 + w2^2*q2^2)/2")}},
        {{"w1", w1}, {"w2", w2}});
  }
  if (id == "oscillator_pair") {
    double w1 = get_param(params, "w1", 1.0);
    double w2 = get_param(params, "w2", 1.0);
    if (w1 <= 0.0 || w2 <= 0.0)
      throw DefinitionError("oscillator_pair: frequencies must be positive");
    return SystemDef(
        "oscillator_pair", {"q1", "q2", "p1", "p2"}, {false, false, false, false},
        HamiltonianDynamics{
            Expr::parse("(p1^2 + w1^2*q1^2)/2 + (p2^2 + w2^2*q2^2)/2"),
            SymplecticStructure::canonical(2)},
        {{"H1", Expr::parse("(p1^2 + w1^2*q1^2)/2")},
         {"H2", Expr::parse("(p2^2 + w2^2*q2^2)/2")}},
        {{"w1", w1}, {"w2", w2}});
  }
  if (id == "particle_oscillator") {
    return SystemDef(
        "particle_oscillator", {"q1", "q2", "p1", "p2"},
        {false, false, false, false},
        HamiltonianDynamics{Expr::parse("p1^2/2 + (p2^2 + q2^2)/2"),
                            SymplecticStructure::canonical(2)},
        {{"Q1", Expr::parse("p1")}, {"Q2", Expr::parse("(p2^2 + q2^2)/2")}});
  }
  throw DefinitionError("unknown corpus id '" + id + "'");
}

ExpectationResult run_expectation(const CorpusEntry& entry, const Expectation& exp,
                                  const AnalysisConfig& cfg) {
  ExpectationResult res;
  res.expectation = exp;
  SystemDef sys = builtin(entry.id, entry.default_params);

  auto map_by_name = [&](const std::string& name) -> ScalarMap {
    if (name == "H" && sys.is_hamiltonian())
      return ScalarMap::from_system(sys, "H", {sys.hamiltonian().hamiltonian});
    for (const auto& q : sys.conserved_candidates())
      if (q.name == name) return ScalarMap::from_system(sys, name, {q.expr});
    throw DefinitionError("no map named '" + name + "' in " + entry.id);
  };

  try {
    if (exp.analysis == "classify") {
      AdaptiveOptions opts;
      opts.rtol = cfg.rtol;
      opts.atol = cfg.atol;
      opts.r_max = cfg.r_max;
      double T = exp.horizon > 0 ? exp.horizon : cfg.horizon;
      double t1 = exp.backward ? -T : T;
      Trajectory traj = integrate_adaptive(sys, exp.x0, 0.0, t1, opts);
      TrajectoryVerdict v = classify_trajectory(sys, traj, cfg.escape_radii);
      res.actual = to_string(v.cls);
      if (v.blowup) {
        std::ostringstream os;
        os << "t_est = " << v.blowup->t_est << ", alpha_norm = " << v.blowup->alpha_norm;
        res.detail = os.str();
      }
    } else if (exp.analysis == "certify") {
      CertifyReport rep = certify_g1(sys, entry.seeds, cfg);
      res.actual = to_string(rep.certificate.verdict);
      res.detail = rep.via.empty() ? "" : "via " + rep.via;
      if (!exp.via_contains.empty() &&
          rep.via.find(exp.via_contains) == std::string::npos) {
        res.pass = false;
        res.detail += " (expected via containing '" + exp.via_contains + "')";
        res.actual += "/wrong-route";
        return res;
      }
    } else if (exp.analysis == "ghost") {
      GhostReport rep = ghost_probe(sys, cfg);
      res.actual = to_string(rep.verdict);
    } else if (exp.analysis == "arnold") {
      std::vector<double> x0 = exp.x0.empty() ? entry.seeds.at(0) : exp.x0;
      double T = exp.horizon > 0 ? exp.horizon : cfg.arnold_horizon;
      LevelTopologyReport rep =
          classify_level_set(sys, sys.conserved_candidates(), x0, T, cfg);
      res.actual = to_string(rep.classification);
      res.detail = "k = " + std::to_string(rep.k_compact);
    } else if (exp.analysis == "confining") {
      ScalarMap map = map_by_name(exp.map_name);
      std::vector<LevelSeed> targets = exp.levels;
      if (targets.empty())
        for (const auto& seed : entry.seeds)
          targets.push_back({map.value_at(seed), seed});
      ConfiningVerdict v = confining_probe(map, targets, cfg.probe_scales,
                                           cfg.resolution, cfg.cell_budget);
      res.actual = to_string(v.verdict);
    } else if (exp.analysis == "properness") {
      ScalarMap map = map_by_name(exp.map_name);
      PropernessVerdict v = properness_probe(map, exp.k_lo, exp.k_hi,
                                             cfg.probe_scales, cfg.resolution,
                                             cfg.cell_budget);
      res.actual = to_string(v.verdict);
    } else if (exp.analysis == "brackets") {
      std::vector<double> center(sys.dim(), 0.0), hw(sys.dim(), cfg.sample_half_width);
      auto points = halton_box(cfg.sample_count, center, hw);
      auto reports = involution_report(sys, sys.conserved_candidates(), points,
                                       cfg.bracket_rtol);
      bool all = !reports.empty();
      for (const auto& b : reports) all = all && b.pass;
      res.actual = all ? "pass" : "fail";
    } else {
      res.actual = "unknown-analysis";
    }
  } catch (const std::exception& ex) {
    res.actual = std::string("error: ") + ex.what();
  }
  res.pass = res.actual == exp.expected;
  return res;
}

std::vector<ExpectationResult> run_expectations(const CorpusEntry& entry,
                                                const AnalysisConfig& cfg) {
  std::vector<ExpectationResult> out;
  out.reserve(entry.expectations.size());
  for (const auto& exp : entry.expectations)
    out.push_back(run_expectation(entry, exp, cfg));
  return out;
}

}  // namespace stabcert
