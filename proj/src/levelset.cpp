#include "stabcert/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <ostream>

namespace stabcert {

namespace {

constexpr double kPi = std::numbers::pi;

// Uniform cell grid over a probe box. Cells are indexed per axis in
// [0, res); corner grids have res+1 points per free axis and res points
// per periodic axis (the seam corner is shared).
class CellGrid {
 public:
  CellGrid(const ProbeBox& box)
      : d_(static_cast<int>(box.center.size())), res_(box.resolution),
        periodic_(box.periodic), lo_(d_), w_(d_), corner_n_(d_) {
    for (int k = 0; k < d_; ++k) {
      lo_[k] = box.center[k] - box.half_widths[k];
      w_[k] = 2.0 * box.half_widths[k] / res_;
      corner_n_[k] = periodic_[k] ? res_ : res_ + 1;
    }
    cell_stride_.assign(d_, 1);
    corner_stride_.assign(d_, 1);
    for (int k = d_ - 2; k >= 0; --k) {
      cell_stride_[k] = cell_stride_[k + 1] * res_;
      corner_stride_[k] = corner_stride_[k + 1] * corner_n_[k + 1];
    }
    n_cells_ = cell_stride_[0] * res_;
    n_corners_ = corner_stride_[0] * corner_n_[0];
  }

  int dim() const { return d_; }
  int res() const { return res_; }
  long long n_cells() const { return n_cells_; }
  long long n_corners() const { return n_corners_; }

  long long cell_index(std::span<const int> idx) const {
    long long s = 0;
    for (int k = 0; k < d_; ++k) s += cell_stride_[k] * idx[k];
    return s;
  }

  void cell_coords(long long index, std::span<int> out) const {
    for (int k = 0; k < d_; ++k) {
      out[k] = static_cast<int>(index / cell_stride_[k]);
      index %= cell_stride_[k];
    }
  }

  long long corner_index(std::span<const int> idx) const {
    long long s = 0;
    for (int k = 0; k < d_; ++k) s += corner_stride_[k] * idx[k];
    return s;
  }

  double corner_pos(int axis, int i) const { return lo_[axis] + w_[axis] * i; }
  double cell_center(int axis, int i) const { return lo_[axis] + w_[axis] * (i + 0.5); }
  double cell_width(int axis) const { return w_[axis]; }
  int corner_count(int axis) const { return corner_n_[axis]; }
  bool periodic(int axis) const { return periodic_[axis]; }

  /// Cell index of the point x, or -1 if outside the box.
  long long locate(std::span<const double> x) const {
    long long s = 0;
    for (int k = 0; k < d_; ++k) {
      double v = x[k];
      if (periodic_[k]) {
        // into [lo, lo + 2pi)
        v = std::remainder(v - lo_[k] - kPi, 2.0 * kPi) + kPi + lo_[k];
      }
      double f = (v - lo_[k]) / w_[k];
      int i = static_cast<int>(std::floor(f));
      if (periodic_[k]) {
        if (i >= res_) i -= res_;
        if (i < 0) i += res_;
      } else if (i == res_ && f <= res_ + 1e-12) {
        i = res_ - 1;  // right edge belongs to the last cell
      }
      if (i < 0 || i >= res_) return -1;
      s += cell_stride_[k] * i;
    }
    return s;
  }

  bool on_boundary_layer(std::span<const int> idx) const {
    for (int k = 0; k < d_; ++k)
      if (!periodic_[k] && (idx[k] == 0 || idx[k] == res_ - 1)) return true;
    return false;
  }

 private:
  int d_, res_;
  std::vector<bool> periodic_;
  std::vector<double> lo_, w_;
  std::vector<int> corner_n_;
  std::vector<long long> cell_stride_, corner_stride_;
  long long n_cells_ = 0, n_corners_ = 0;
};

// Corner class relative to an interval [lo-tol, hi+tol]:
// 0 below, 1 inside, 2 above, 3 evaluation failed.
std::vector<std::uint8_t> classify_corners(const CellGrid& grid, const CompiledExpr& f,
                                           double lo, double hi, double tol) {
  std::vector<std::uint8_t> out(grid.n_corners());
  int d = grid.dim();
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  for (int k = 0; k < d; ++k) x[k] = grid.corner_pos(k, 0);
  long long flat = 0;
  for (;;) {
    double v;
    std::uint8_t c;
    try {
      v = f.eval(x);
      c = v < lo - tol ? 0 : (v > hi + tol ? 2 : 1);
    } catch (const EvalError&) {
      c = 3;
    }
    out[flat] = c;
    // odometer over corner indices, last axis fastest
    int k = d - 1;
    for (; k >= 0; --k) {
      if (++idx[k] < grid.corner_count(k)) {
        x[k] = grid.corner_pos(k, idx[k]);
        break;
      }
      idx[k] = 0;
      x[k] = grid.corner_pos(k, 0);
    }
    ++flat;
    if (k < 0) break;
  }
  return out;
}

// In-set test: for every map component the cell corners must enter the
// interval or straddle it.
class CellTest {
 public:
  CellTest(const CellGrid& grid, std::vector<std::vector<std::uint8_t>> classes)
      : grid_(grid), classes_(std::move(classes)), corner_idx_(grid.dim()) {}

  bool operator()(std::span<const int> cell) const {
    int d = grid_.dim();
    for (const auto& cls : classes_) {
      bool has_lo = false, has_in = false, has_hi = false;
      for (unsigned mask = 0; mask < (1u << d); ++mask) {
        for (int k = 0; k < d; ++k) {
          int i = cell[k] + ((mask >> k) & 1u);
          if (grid_.periodic(k) && i == grid_.res()) i = 0;
          corner_idx_[k] = i;
        }
        switch (cls[grid_.corner_index(corner_idx_)]) {
          case 0: has_lo = true; break;
          case 1: has_in = true; break;
          case 2: has_hi = true; break;
          default: break;  // failed corner contributes nothing
        }
        if (has_in || (has_lo && has_hi)) break;
      }
      if (!(has_in || (has_lo && has_hi))) return false;
    }
    return true;
  }

 private:
  const CellGrid& grid_;
  std::vector<std::vector<std::uint8_t>> classes_;
  mutable std::vector<int> corner_idx_;
};

ProbeBox make_box(const ScalarMap& f, std::span<const double> center, double scale,
                  int resolution) {
  ProbeBox box;
  std::size_t d = f.dim();
  box.center.assign(d, 0.0);
  box.half_widths.assign(d, scale);
  box.periodic = f.periodic;
  box.resolution = resolution;
  for (std::size_t k = 0; k < d; ++k) {
    if (f.periodic[k]) {
      box.center[k] = 0.0;
      box.half_widths[k] = kPi;  // one full circle, seam-consistent wrap
    } else {
      box.center[k] = center.empty() ? 0.0 : center[k];
    }
  }
  return box;
}

double boundary_distance(const CellGrid& grid, const ProbeBox& box,
                         std::span<const int> cell) {
  // distance from box center to the far corner of the cell, wrapped on
  // periodic axes
  double s = 0.0;
  for (int k = 0; k < grid.dim(); ++k) {
    double c = grid.cell_center(k, cell[k]);
    double d = c - box.center[k];
    if (grid.periodic(k)) {
      d = std::remainder(d, 2.0 * kPi);
    }
    double far = std::abs(d) + 0.5 * grid.cell_width(k);
    s += far * far;
  }
  return std::sqrt(s);
}

}  // namespace

ScalarMap ScalarMap::from_system(const SystemDef& sys, std::string name,
                                 std::vector<Expr> components) {
  ScalarMap m;
  m.name = std::move(name);
  m.components = std::move(components);
  m.variables = sys.variables();
  m.periodic = sys.periodic();
  m.parameters = sys.parameters();
  return m;
}

std::vector<double> ScalarMap::value_at(std::span<const double> x) const {
  Bindings b = parameters.empty() ? Bindings{} : Bindings(parameters.begin(), parameters.end());
  for (std::size_t k = 0; k < variables.size(); ++k) {
    double v = x[k];
    if (periodic[k]) v = std::remainder(v, 2.0 * kPi);
    b[variables[k]] = v;
  }
  std::vector<double> out;
  out.reserve(components.size());
  for (const auto& c : components) out.push_back(c.eval(b));
  return out;
}

ProbeBox ProbeBox::centered(std::size_t dim, double half_width, int resolution,
                            std::vector<bool> periodic) {
  ProbeBox box;
  box.center.assign(dim, 0.0);
  box.half_widths.assign(dim, half_width);
  box.resolution = resolution;
  box.periodic = periodic.empty() ? std::vector<bool>(dim, false) : std::move(periodic);
  for (std::size_t k = 0; k < dim; ++k)
    if (box.periodic[k]) box.half_widths[k] = kPi;
  return box;
}

double ProbeBox::scale() const {
  double s = 0.0;
  bool any_free = false;
  for (std::size_t k = 0; k < half_widths.size(); ++k)
    if (!periodic[k]) {
      any_free = true;
      s = std::max(s, half_widths[k]);
    }
  return any_free ? s : kPi;
}

long long ProbeBox::total_cells() const {
  long long n = 1;
  for (std::size_t k = 0; k < center.size(); ++k) {
    n *= resolution;
    if (n < 0) return std::numeric_limits<long long>::max();
  }
  return n;
}

void ProbeBox::validate(long long cell_budget) const {
  if (center.size() != half_widths.size() || center.size() != periodic.size())
    throw std::invalid_argument("probe box: inconsistent dimensions");
  if (resolution < 8) throw std::invalid_argument("probe box: resolution must be >= 8");
  for (double h : half_widths)
    if (!(h > 0.0)) throw std::invalid_argument("probe box: half-widths must be positive");
  if (total_cells() > cell_budget)
    throw BudgetError("probe box exceeds cell budget (" +
                      std::to_string(total_cells()) + " cells)");
}

int default_resolution(std::size_t dim) {
  if (dim <= 2) return 256;
  if (dim <= 4) return 64;
  if (dim <= 6) return 16;
  throw std::invalid_argument(
      "level-set probing refused above dimension 6; use trajectory-based evidence");
}

ComponentReport component_flood_fill(const ScalarMap& f, std::span<const double> mu,
                                     std::span<const double> seed, const ProbeBox& box,
                                     long long cell_budget, std::ostream* cells_csv) {
  if (mu.size() != f.r()) throw std::invalid_argument("flood fill: level size mismatch");
  if (seed.size() != f.dim()) throw std::invalid_argument("flood fill: seed size mismatch");
  box.validate(cell_budget);

  ComponentReport rep;
  rep.map_name = f.name;
  rep.level.assign(mu.begin(), mu.end());
  rep.seed.assign(seed.begin(), seed.end());
  rep.scale = box.scale();
  rep.resolution = box.resolution;

  // precondition: the seed evaluates onto the level within tolerance
  std::vector<double> fs = f.value_at(seed);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double tol = 1e-9 * (1.0 + std::abs(mu[i]));
    if (!(std::abs(fs[i] - mu[i]) <= tol)) {
      rep.outcome = ComponentOutcome::SeedNotInSet;
      return rep;
    }
  }

  CellGrid grid(box);
  long long seed_cell = grid.locate(seed);
  if (seed_cell < 0) {
    rep.outcome = ComponentOutcome::SeedNotInSet;
    return rep;
  }

  auto compiled = compile_all(f.components, f.variables, f.parameters);
  std::vector<std::vector<std::uint8_t>> classes;
  classes.reserve(f.r());
  for (std::size_t i = 0; i < f.r(); ++i) {
    double tol = 1e-9 * (1.0 + std::abs(mu[i]));
    classes.push_back(classify_corners(grid, compiled[i], mu[i], mu[i], tol));
  }
  CellTest in_set(grid, std::move(classes));

  const int d = grid.dim();
  std::vector<bool> in_component(grid.n_cells(), false);
  std::deque<long long> queue;
  // The seed cell contains a point of the level set, so it belongs to the
  // component even when the corner detector misses it (tangent or
  // critical levels).
  in_component[seed_cell] = true;
  queue.push_back(seed_cell);

  std::vector<int> cell(d), nb(d);
  double max_radius = 0.0;
  while (!queue.empty()) {
    long long cur = queue.front();
    queue.pop_front();
    grid.cell_coords(cur, cell);
    ++rep.cell_count;
    if (grid.on_boundary_layer(cell)) rep.touches_boundary = true;
    max_radius = std::max(max_radius, boundary_distance(grid, box, cell));

    for (int k = 0; k < d; ++k) {
      for (int dir = -1; dir <= 1; dir += 2) {
        nb.assign(cell.begin(), cell.end());
        int i = nb[k] + dir;
        if (grid.periodic(k)) {
          if (i < 0) i = grid.res() - 1;
          if (i >= grid.res()) i = 0;
        } else if (i < 0 || i >= grid.res()) {
          continue;
        }
        nb[k] = i;
        long long nbi = grid.cell_index(nb);
        if (in_component[nbi]) continue;
        if (!in_set(nb)) continue;
        in_component[nbi] = true;
        queue.push_back(nbi);
      }
    }
  }
  rep.bounding_radius = max_radius;
  rep.outcome = rep.touches_boundary ? ComponentOutcome::TouchesBoundary
                                     : ComponentOutcome::Bounded;

  if (cells_csv) {
    std::ostream& os = *cells_csv;
    for (int k = 0; k < d; ++k) os << "i" << (k + 1) << ",";
    os << "in_set\n";
    std::vector<int> idx(d);
    for (long long c = 0; c < grid.n_cells(); ++c) {
      grid.cell_coords(c, idx);
      for (int k = 0; k < d; ++k) os << idx[k] << ",";
      os << (in_component[c] ? 1 : 0) << "\n";
    }
  }
  return rep;
}

ConfiningVerdict confining_probe(const ScalarMap& f, std::span<const LevelSeed> targets,
                                 std::span<const double> scales, int resolution,
                                 long long cell_budget) {
  if (targets.empty())
    throw std::invalid_argument("confining_probe: no level/seed targets");
  if (scales.empty()) throw std::invalid_argument("confining_probe: empty scale schedule");
  for (std::size_t i = 1; i < scales.size(); ++i)
    if (scales[i] <= scales[i - 1])
      throw std::invalid_argument("confining_probe: scales must be strictly increasing");
  if (resolution == 0) resolution = default_resolution(f.dim());

  bool all_periodic = true;
  for (bool p : f.periodic) all_periodic = all_periodic && p;

  ConfiningVerdict verdict;
  verdict.scales.assign(scales.begin(), scales.end());
  verdict.resolution = resolution;

  bool any_escape = false, any_inconclusive = false;
  for (const auto& target : targets) {
    ComponentProbe probe;
    probe.target = target;
    std::size_t n_scales = all_periodic ? 1 : scales.size();
    for (std::size_t s = 0; s < n_scales; ++s) {
      ProbeBox box = make_box(f, target.seed, scales[s], resolution);
      try {
        ComponentReport rep = component_flood_fill(f, target.level, target.seed, box,
                                                   cell_budget);
        probe.attempts.push_back(rep);
        if (rep.outcome == ComponentOutcome::SeedNotInSet) {
          probe.outcome = ComponentProbe::Outcome::Inconclusive;
          probe.note = "seed does not lie on the level within tolerance";
          break;
        }
        if (rep.outcome == ComponentOutcome::Bounded) {
          probe.outcome = ComponentProbe::Outcome::BoundedComponent;
          probe.bounded_at_scale = rep.scale;
          break;
        }
        probe.outcome = ComponentProbe::Outcome::EscapesAllScales;
      } catch (const BudgetError& e) {
        probe.outcome = ComponentProbe::Outcome::Inconclusive;
        probe.note = e.what();
        break;
      }
    }
    switch (probe.outcome) {
      case ComponentProbe::Outcome::BoundedComponent: break;
      case ComponentProbe::Outcome::EscapesAllScales: any_escape = true; break;
      case ComponentProbe::Outcome::Inconclusive: any_inconclusive = true; break;
    }
    verdict.probes.push_back(std::move(probe));
  }
  if (any_escape) verdict.verdict = Confining::NotConfiningAtScale;
  else if (any_inconclusive) verdict.verdict = Confining::Inconclusive;
  else verdict.verdict = Confining::ConfiningEvidence;
  return verdict;
}

PropernessVerdict properness_probe(const ScalarMap& f, std::span<const double> k_lo,
                                   std::span<const double> k_hi,
                                   std::span<const double> scales, int resolution,
                                   long long cell_budget) {
  if (k_lo.size() != f.r() || k_hi.size() != f.r())
    throw std::invalid_argument("properness_probe: K dimension mismatch");
  if (scales.empty()) throw std::invalid_argument("properness_probe: empty scale schedule");
  for (std::size_t i = 0; i < k_lo.size(); ++i)
    if (!(k_lo[i] < k_hi[i]))
      throw std::invalid_argument("properness_probe: K must be non-degenerate");
  if (resolution == 0) resolution = default_resolution(f.dim());

  PropernessVerdict verdict;
  verdict.k_lo.assign(k_lo.begin(), k_lo.end());
  verdict.k_hi.assign(k_hi.begin(), k_hi.end());
  verdict.scales.assign(scales.begin(), scales.end());
  verdict.resolution = resolution;

  bool all_periodic = true;
  for (bool p : f.periodic) all_periodic = all_periodic && p;
  if (all_periodic) {
    // compact domain: every continuous map from it is proper
    verdict.verdict = Properness::ProperEvidence;
    verdict.bounded_at_scale = kPi;
    verdict.note = "domain is a torus; preimages are closed subsets of a compact space";
    return verdict;
  }

  auto compiled = compile_all(f.components, f.variables, f.parameters);
  const int d = static_cast<int>(f.dim());

  for (double scale : scales) {
    ProbeBox box = make_box(f, {}, scale, resolution);
    try {
      box.validate(cell_budget);
    } catch (const BudgetError& e) {
      verdict.verdict = Properness::Inconclusive;
      verdict.note = e.what();
      return verdict;
    }
    CellGrid grid(box);
    std::vector<std::vector<std::uint8_t>> classes;
    for (std::size_t i = 0; i < f.r(); ++i) {
      double tol = 1e-9 * (1.0 + std::abs(k_lo[i]) + std::abs(k_hi[i]));
      classes.push_back(classify_corners(grid, compiled[i], k_lo[i], k_hi[i], tol));
    }
    CellTest marked(grid, std::move(classes));

    // scan the boundary layer; a bounded marked region never reaches it
    verdict.witness_cells.clear();
    bool touches = false;
    std::vector<int> cell(d);
    for (long long c = 0; c < grid.n_cells(); ++c) {
      grid.cell_coords(c, cell);
      if (!grid.on_boundary_layer(cell)) continue;
      if (!marked(cell)) continue;
      touches = true;
      if (verdict.witness_cells.size() < 8)
        verdict.witness_cells.emplace_back(cell.begin(), cell.end());
      else
        break;
    }
    if (!touches) {
      verdict.verdict = Properness::ProperEvidence;
      verdict.bounded_at_scale = scale;
      return verdict;
    }
  }
  verdict.verdict = Properness::NotProperEvidence;
  return verdict;
}

SosEquivalenceReport sum_of_squares_equivalence(const ScalarMap& j,
                                                std::span<const double> scales,
                                                int resolution, long long cell_budget) {
  if (j.r() < 1) throw std::invalid_argument("sum_of_squares_equivalence: empty map");
  SosEquivalenceReport rep;

  Expr p = Expr::constant(0.0);
  for (const auto& q : j.components) p = p + q * q;
  rep.p_rendered = p.render();
  ScalarMap pm = j;
  pm.name = j.name + "_sum_of_squares";
  pm.components = {p};

  const double r = static_cast<double>(j.r());
  rep.all_agree = true;
  for (double c : {1.0, 2.0, 4.0}) {
    SosEquivalenceEntry entry;
    entry.c = c;
    std::vector<double> lo(j.r(), -c), hi(j.r(), c);
    entry.j_verdict = properness_probe(j, lo, hi, scales, resolution, cell_budget).verdict;
    std::vector<double> plo{0.0}, phi{r * c * c};
    entry.p_verdict =
        properness_probe(pm, plo, phi, scales, resolution, cell_budget).verdict;
    entry.agree = entry.j_verdict == entry.p_verdict;
    rep.all_agree = rep.all_agree && entry.agree;
    rep.entries.push_back(entry);
  }
  return rep;
}

std::optional<FutilityAdvisory> composition_futility(const std::string& map_name,
                                                     const ConfiningVerdict& v) {
  if (v.verdict != Confining::NotConfiningAtScale) return std::nullopt;
  for (const auto& probe : v.probes) {
    if (probe.outcome != ComponentProbe::Outcome::EscapesAllScales) continue;
    FutilityAdvisory adv;
    adv.witness_level = probe.target.level;
    adv.witness_seed = probe.target.seed;
    adv.witness_scale = probe.attempts.empty() ? 0.0 : probe.attempts.back().scale;
    adv.message = "no functional combination g(" + map_name +
                  ") can be confining: the probed component escapes every scale";
    return adv;
  }
  return std::nullopt;
}

std::optional<FutilityAdvisory> composition_futility(const std::string& map_name,
                                                     const PropernessVerdict& v) {
  if (v.verdict != Properness::NotProperEvidence || v.witness_cells.empty())
    return std::nullopt;
  FutilityAdvisory adv;
  adv.witness_scale = v.scales.empty() ? 0.0 : v.scales.back();
  adv.message = "no continuous composition g(" + map_name +
                ") can be a proper map: marked preimage cells reach the probe "
                "boundary at every scale";
  return adv;
}

const char* to_string(Confining v) {
  switch (v) {
    case Confining::ConfiningEvidence: return "ConfiningEvidence";
    case Confining::NotConfiningAtScale: return "NotConfiningAtScale";
    default: return "Inconclusive";
  }
}

const char* to_string(Properness v) {
  switch (v) {
    case Properness::ProperEvidence: return "ProperEvidence";
    case Properness::NotProperEvidence: return "NotProperEvidence";
    default: return "Inconclusive";
  }
}

const char* to_string(ComponentOutcome v) {
  switch (v) {
    case ComponentOutcome::Bounded: return "Bounded";
    case ComponentOutcome::TouchesBoundary: return "TouchesBoundary";
    default: return "SeedNotInSet";
  }
}

const char* to_string(ComponentProbe::Outcome v) {
  switch (v) {
    case ComponentProbe::Outcome::BoundedComponent: return "BoundedComponent";
    case ComponentProbe::Outcome::EscapesAllScales: return "EscapesAllScales";
    default: return "Inconclusive";
  }
}

}  // namespace stabcert
