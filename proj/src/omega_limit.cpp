#include "rdcircle/omega_limit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

namespace rdcircle {

void to_json(nlohmann::json& j, const OmegaTolerances& t) {
  j = nlohmann::json{{"hull_tol", t.hull_tol},
                     {"fiber_tol", t.fiber_tol},
                     {"t_min", t.t_min},
                     {"gap_factor", t.gap_factor},
                     {"syndetic_fraction", t.syndetic_fraction},
                     {"min_members", t.min_members},
                     {"critical_tol", t.critical_tol},
                     {"homogeneity_tol", t.homogeneity_tol},
                     {"coverage_probes", t.coverage_probes},
                     {"seed", t.seed}};
}

void from_json(const nlohmann::json& j, OmegaTolerances& t) {
  OmegaTolerances d;
  t.hull_tol = j.value("hull_tol", d.hull_tol);
  t.fiber_tol = j.value("fiber_tol", d.fiber_tol);
  t.t_min = j.value("t_min", d.t_min);
  t.gap_factor = j.value("gap_factor", d.gap_factor);
  t.syndetic_fraction = j.value("syndetic_fraction", d.syndetic_fraction);
  t.min_members = j.value("min_members", d.min_members);
  t.critical_tol = j.value("critical_tol", d.critical_tol);
  t.homogeneity_tol = j.value("homogeneity_tol", d.homogeneity_tol);
  t.coverage_probes = j.value("coverage_probes", d.coverage_probes);
  t.seed = j.value("seed", d.seed);
}

OmegaSample sample_omega(const Trajectory& traj, double t_transient, std::size_t stride) {
  if (traj.samples.empty()) throw std::invalid_argument("empty trajectory");
  const double t0 = traj.samples.front().t;
  if (!(t_transient >= 0.0) || traj.t_end() - t0 <= 2.0 * t_transient)
    throw std::invalid_argument("trajectory shorter than twice the transient");
  const std::size_t base = std::max<std::size_t>(1, traj.sample_stride);
  if (stride == 0 || stride % base != 0)
    throw std::invalid_argument("stride must be a positive multiple of the trajectory sample stride");
  const std::size_t every = stride / base;
  const double stored_dt = static_cast<double>(base) * traj.config.dt;

  OmegaSample s;
  s.t_transient = t_transient;
  s.config = traj.config;
  s.field = traj.field;
  for (std::size_t i = 0; i < traj.samples.size(); i += every) {
    const auto& sample = traj.samples[i];
    // the final stored sample may sit off the regular grid
    if (std::abs(sample.t - t0 - static_cast<double>(i) * stored_dt) > 1e-9 * std::max(1.0, sample.t)) continue;
    if (sample.t <= t0 + t_transient) continue;
    const double c1 = norm_c1(sample.state);
    if (!std::isfinite(c1) || c1 > traj.config.blowup_threshold) throw std::runtime_error("no bounded ω-limit");
    s.snapshots.push_back({sample.t, sample.state, sample.hull_phase});
  }
  if (s.snapshots.empty()) throw std::invalid_argument("no samples after the transient");
  return s;
}

namespace {

std::vector<GridFunction> derivatives(const OmegaSample& s) {
  std::vector<GridFunction> out;
  out.reserve(s.size());
  for (const auto& snap : s.snapshots) out.push_back(deriv_x(snap.state));
  return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// C¹ distance on the grid, matching distance_c1 without recomputing derivatives.
struct C1Table {
  std::vector<GridFunction> du;
  const OmegaSample* s;

  explicit C1Table(const OmegaSample& sample) : du(derivatives(sample)), s(&sample) {}

  double operator()(std::size_t i, std::size_t j) const {
    return max_abs_diff(s->snapshots[i].state.values(), s->snapshots[j].state.values()) +
           max_abs_diff(du[i].values(), du[j].values());
  }
};

// Weighted phase distance with an early exit once the running sum reaches tol;
// heavy coordinates go first.
class HullMetric {
 public:
  explicit HullMetric(const ForcingField& field) : weights_(field.hull_weights().begin(), field.hull_weights().end()) {
    order_.resize(weights_.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return weights_[a] > weights_[b]; });
  }

  bool within(std::span<const double> a, std::span<const double> b, double tol) const {
    double d = 0.0;
    for (std::size_t k : order_) {
      d += weights_[k] * phase_gap(a[k], b[k]);
      if (d >= tol) return false;
    }
    return d < tol;
  }

 private:
  std::vector<double> weights_;
  std::vector<std::size_t> order_;
};

// Largest-gap splitting. A split stands when the gap dwarfs the extent of the
// clusters on either side of it, both found recursively.
void split_clusters(const std::vector<double>& v, std::size_t lo, std::size_t hi, const OmegaTolerances& tols,
                    std::vector<std::pair<double, double>>& out) {
  std::size_t g = lo;
  double gap = -1.0;
  for (std::size_t i = lo; i < hi; ++i)
    if (v[i + 1] - v[i] > gap) {
      gap = v[i + 1] - v[i];
      g = i;
    }
  if (hi == lo || gap <= tols.fiber_tol) {
    out.emplace_back(v[lo], v[hi]);
    return;
  }
  std::vector<std::pair<double, double>> left, right;
  split_clusters(v, lo, g, tols, left);
  split_clusters(v, g + 1, hi, tols, right);
  const double spread =
      std::max(left.back().second - left.back().first, right.front().second - right.front().first);
  if (gap > tols.gap_factor * spread) {
    out.insert(out.end(), left.begin(), left.end());
    out.insert(out.end(), right.begin(), right.end());
  } else {
    out.emplace_back(v[lo], v[hi]);
  }
}

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

bool homogeneity_test(const OmegaSample& s, double tol) {
  return std::all_of(s.snapshots.begin(), s.snapshots.end(),
                     [&](const OmegaSnapshot& snap) { return norm_sup(deriv_x(snap.state)) < tol; });
}

CriticalPoint find_common_critical_point(const OmegaSample& s, double tol) {
  if (s.snapshots.empty()) throw std::invalid_argument("empty sample");
  CriticalPoint cp;
  const auto du = derivatives(s);
  double worst = 0.0;
  for (const auto& d : du) worst = std::max(worst, norm_sup(d));
  if (worst < tol) {
    cp.every_point = true;
    cp.x0 = 0.0;
    cp.best_x = 0.0;
    cp.max_slope = worst;
    return cp;
  }

  const std::size_t factor = 4;
  const std::size_t m = s.snapshots.front().state.size() * factor;
  std::vector<double> envelope(m, 0.0);
  for (const auto& d : du) {
    const auto fine = d.refined(factor);
    for (std::size_t j = 0; j < m; ++j) envelope[j] = std::max(envelope[j], std::abs(fine[j]));
  }
  const auto best = static_cast<std::size_t>(std::min_element(envelope.begin(), envelope.end()) - envelope.begin());
  const double h = kTwoPi / static_cast<double>(m);
  const double xg = h * static_cast<double>(best);

  auto envelope_at = [&](double x) {
    double e = 0.0;
    for (const auto& d : du) e = std::max(e, std::abs(d(x)));
    return e;
  };
  const auto [xp, fp] = boost::math::tools::brent_find_minima(envelope_at, xg - h, xg + h, 40);
  double x = xg;
  double f = envelope[best];
  if (fp < f) {
    x = wrap_phase(xp);
    f = fp;
  }
  cp.best_x = x;
  cp.max_slope = f;
  if (f < tol) cp.x0 = x;
  return cp;
}

MinimalSetResult count_minimal_sets(const OmegaSample& s, double x0, const OmegaTolerances& tols) {
  const std::size_t n = s.size();
  if (n == 0) throw std::runtime_error("insufficient recurrence sampling");
  const C1Table c1(s);
  const HullMetric hull(s.field);
  std::vector<double> section(n);
  for (std::size_t i = 0; i < n; ++i) section[i] = s.snapshots[i].state(x0);

  // near-returns
  std::vector<std::vector<double>> returns(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(s.snapshots[j].t - s.snapshots[i].t) <= tols.t_min) continue;
      if (!hull.within(s.snapshots[i].hull_phase, s.snapshots[j].hull_phase, tols.hull_tol)) continue;
      if (c1(i, j) >= tols.fiber_tol) continue;
      returns[i].push_back(s.snapshots[j].t);
      returns[j].push_back(s.snapshots[i].t);
    }

  MinimalSetResult out;
  out.recurrent.assign(n, false);
  const double w0 = s.snapshots.front().t;
  const double w1 = s.snapshots.back().t;
  const double max_gap = tols.syndetic_fraction * (w1 - w0);
  for (std::size_t i = 0; i < n; ++i) {
    if (returns[i].empty()) continue;
    auto times = returns[i];
    times.push_back(s.snapshots[i].t);
    times.push_back(w0);
    times.push_back(w1);
    std::sort(times.begin(), times.end());
    double gap = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) gap = std::max(gap, times[k] - times[k - 1]);
    out.recurrent[i] = gap <= max_gap;
  }

  // hull fibers around greedily chosen bases
  std::vector<std::size_t> bases;
  for (std::size_t i = 0; i < n; ++i) {
    const bool covered = std::any_of(bases.begin(), bases.end(), [&](std::size_t b) {
      return hull.within(s.snapshots[b].hull_phase, s.snapshots[i].hull_phase, tols.hull_tol);
    });
    if (!covered) bases.push_back(i);
  }

  bool any_populated = false;
  std::size_t any_recurrent = 0;
  std::vector<bool> connecting(n, false);
  for (std::size_t b : bases) {
    FiberStats fiber;
    fiber.base_index = b;
    fiber.base_phase = s.snapshots[b].hull_phase;
    for (std::size_t i = 0; i < n; ++i)
      if (hull.within(fiber.base_phase, s.snapshots[i].hull_phase, tols.hull_tol)) fiber.members.push_back(i);
    fiber.value_range = {INFINITY, -INFINITY};
    for (std::size_t a = 0; a < fiber.members.size(); ++a) {
      const std::size_t i = fiber.members[a];
      fiber.value_range.first = std::min(fiber.value_range.first, section[i]);
      fiber.value_range.second = std::max(fiber.value_range.second, section[i]);
      for (std::size_t c = a + 1; c < fiber.members.size(); ++c)
        fiber.diameter = std::max(fiber.diameter, c1(i, fiber.members[c]));
    }
    fiber.well_populated = fiber.members.size() >= tols.min_members;
    std::vector<double> values;
    for (std::size_t i : fiber.members)
      if (out.recurrent[i]) values.push_back(section[i]);
    fiber.recurrent_members = values.size();
    if (!values.empty()) {
      std::sort(values.begin(), values.end());
      split_clusters(values, 0, values.size() - 1, tols, fiber.clusters);
    }
    if (fiber.well_populated) {
      any_populated = true;
      any_recurrent += values.size();
      out.count = std::max(out.count, fiber.clusters.size());
      if (!fiber.clusters.empty())
        for (std::size_t i : fiber.members) {
          if (out.recurrent[i]) continue;
          const bool inside = std::any_of(fiber.clusters.begin(), fiber.clusters.end(), [&](const auto& c) {
            return section[i] >= c.first - tols.fiber_tol && section[i] <= c.second + tols.fiber_tol;
          });
          if (!inside) connecting[i] = true;
        }
    }
    out.fibers.push_back(std::move(fiber));
  }
  if (!any_populated || any_recurrent == 0) throw std::runtime_error("insufficient recurrence sampling");
  for (std::size_t i = 0; i < n; ++i)
    if (connecting[i]) out.connecting.push_back(i);
  out.connecting_detected = !out.connecting.empty();
  return out;
}

CoverResult cover_test(const OmegaSample& s, const MinimalSetResult& result, const OmegaTolerances& tols) {
  if (result.fibers.empty()) throw std::runtime_error("insufficient recurrence sampling");
  const C1Table c1(s);
  CoverResult out;
  for (const auto& fiber : result.fibers) {
    if (!fiber.well_populated) continue;
    std::vector<std::size_t> rec;
    for (std::size_t i : fiber.members)
      if (result.recurrent[i]) rec.push_back(i);
    if (rec.empty()) continue;
    DisjointSet sets(rec.size());
    for (std::size_t a = 0; a < rec.size(); ++a)
      for (std::size_t b = a + 1; b < rec.size(); ++b)
        if (c1(rec[a], rec[b]) < tols.fiber_tol) sets.unite(a, b);
    std::size_t components = 0;
    for (std::size_t a = 0; a < rec.size(); ++a)
      if (sets.find(a) == a) ++components;
    out.cardinality = std::max(out.cardinality, components);
  }
  if (out.cardinality == 0) throw std::runtime_error("insufficient recurrence sampling");

  const auto freqs = s.field.frequencies();
  if (freqs.empty()) {
    out.coverage = 1.0;
    return out;
  }
  const HullMetric hull(s.field);
  std::mt19937_64 rng(tols.seed);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::size_t hit = 0;
  std::vector<double> probe(freqs.size());
  for (std::size_t p = 0; p < tols.coverage_probes; ++p) {
    for (auto& a : probe) a = angle(rng);
    for (const auto& snap : s.snapshots)
      if (hull.within(probe, snap.hull_phase, tols.hull_tol)) {
        ++hit;
        break;
      }
  }
  out.coverage = tols.coverage_probes ? static_cast<double>(hit) / static_cast<double>(tols.coverage_probes) : 0.0;
  return out;
}

ProximalResult proximal_pair_scan(const Trajectory& a, const Trajectory& b, double tol) {
  if (a.samples.size() != b.samples.size() || a.samples.empty())
    throw std::invalid_argument("trajectories must share their sample times");
  std::vector<double> d(a.samples.size());
  bool distinct = false;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::abs(a.samples[i].t - b.samples[i].t) > 1e-12 * std::max(1.0, std::abs(a.samples[i].t)))
      throw std::invalid_argument("trajectories must share their sample times");
    if (a.samples[i].state.size() != b.samples[i].state.size())
      throw std::invalid_argument("trajectories must share their grid");
    d[i] = distance_c1(a.samples[i].state, b.samples[i].state);
    distinct = distinct || d[i] > 0.0;
  }
  if (!distinct) throw std::invalid_argument("trajectories are identical");
  const std::size_t third = std::max<std::size_t>(1, d.size() / 3);
  ProximalResult r;
  r.forward_min = INFINITY;
  r.backward_min = INFINITY;
  for (std::size_t i = 0; i < third; ++i) {
    r.backward_min = std::min(r.backward_min, d[i]);
    if (d[i] < tol) ++r.backward_dips;
    const double late = d[d.size() - 1 - i];
    r.forward_min = std::min(r.forward_min, late);
    if (late < tol) ++r.forward_dips;
  }
  r.two_sided = r.forward_dips > 0 && r.backward_dips > 0;
  return r;
}

std::vector<double> unstable_sign_probes(const OmegaSample& s, std::size_t probes, double dead_band) {
  std::vector<double> bad;
  if (s.snapshots.empty() || probes == 0) return bad;
  const auto du = derivatives(s);
  const std::size_t tail = du.size() / 2;
  for (std::size_t p = 0; p < probes; ++p) {
    const double a = kTwoPi * (static_cast<double>(p) + 0.5) / static_cast<double>(probes);
    int sign = 0;
    bool stable = true;
    for (std::size_t i = tail; i < du.size() && stable; ++i) {
      const double v = du[i](a);
      if (std::abs(v) < dead_band) continue;
      const int sg = v > 0.0 ? 1 : -1;
      if (sign != 0 && sg != sign) stable = false;
      sign = sg;
    }
    if (!stable) bad.push_back(a);
  }
  return bad;
}

double reflection_defect(const OmegaSample& s, double x0) {
  double worst = 0.0;
  for (const auto& snap : s.snapshots) worst = std::max(worst, norm_sup(reflect(snap.state, x0) - snap.state));
  return worst;
}

std::string to_string(Trichotomy t) {
  switch (t) {
    case Trichotomy::minimal:
      return "(i) minimal";
    case Trichotomy::one_minimal_connecting:
      return "(ii) one-minimal-plus-connecting";
    case Trichotomy::two_minimal_connecting:
      return "(iii) two-minimal-plus-connecting";
    case Trichotomy::undetermined:
      break;
  }
  return "undetermined";
}

OmegaAnalysis analyze_omega(const OmegaSample& s, const OmegaTolerances& tols) {
  OmegaAnalysis a;
  a.tolerances = tols;
  a.critical = find_common_critical_point(s, tols.critical_tol);
  a.homogeneous = homogeneity_test(s, tols.homogeneity_tol);
  const double x0 = a.critical.x0.value_or(a.critical.best_x);
  a.minimal = count_minimal_sets(s, x0, tols);
  a.cover = cover_test(s, a.minimal, tols);
  return a;
}

Trichotomy trichotomy_case(std::size_t count, bool connecting) {
  if (count == 1) return connecting ? Trichotomy::one_minimal_connecting : Trichotomy::minimal;
  if (count == 2) return Trichotomy::two_minimal_connecting;
  return Trichotomy::undetermined;
}

OmegaReport classify(const OmegaAnalysis& a, const SpectrumEstimate& spectrum) {
  OmegaReport r;
  r.tolerances = a.tolerances;
  r.x0 = a.critical.x0;
  r.x0_every_point = a.critical.every_point;
  r.x0_max_slope = a.critical.max_slope;
  r.homogeneous = a.homogeneous;
  r.minimal_set_count = a.minimal.count;
  r.connecting_detected = a.minimal.connecting_detected;
  r.cover_cardinality = a.cover.cardinality;
  r.fiber_coverage = a.cover.coverage;
  r.fibers = a.minimal.fibers.size();
  r.snapshots = a.minimal.recurrent.size();
  r.dim_u = spectrum.dim_u;
  r.dim_c = spectrum.dim_c;

  r.trichotomy = trichotomy_case(r.minimal_set_count, r.connecting_detected);
  if (r.minimal_set_count > 2) {
    FalsificationEvent e{"minimal-set count", "", {}};
    for (const auto& f : a.minimal.fibers)
      if (f.well_populated && f.clusters.size() > 2) {
        e.snapshots.insert(e.snapshots.end(), f.members.begin(), f.members.end());
      }
    e.detail = std::to_string(r.minimal_set_count) + " recurrent clusters in one fiber";
    r.falsifications.push_back(std::move(e));
  }
  if (a.symmetric && !r.homogeneous && !r.x0) {
    std::ostringstream os;
    os.precision(6);
    os << "no common critical point below " << a.tolerances.critical_tol << " (best max|u_x| " << r.x0_max_slope
       << ")";
    r.falsifications.push_back({"common critical point", os.str(), {}});
  }

  ImplicationFlag& flag = r.implication;
  if (r.dim_c == 0) {
    flag.rule = "a";
    flag.applicable = true;
    flag.passed = r.homogeneous && r.minimal_set_count == 1 && r.cover_cardinality == 1;
    flag.detail = "dim_c = 0 expects a homogeneous 1-cover with one minimal set";
  } else if (r.dim_c == 1 && r.dim_u > 0) {
    flag.rule = "b";
    flag.applicable = true;
    flag.passed = !r.homogeneous && r.cover_cardinality == 1;
    flag.detail = "dim_c = 1, dim_u > 0 expects an inhomogeneous 1-cover";
  } else if (r.dim_c == 1) {
    flag.rule = "c";
    flag.applicable = true;
    flag.passed = r.homogeneous;
    flag.detail = "dim_c = 1, dim_u = 0 expects a homogeneous limit";
  } else {
    flag.rule = "none";
    flag.applicable = false;
    flag.passed = true;
    flag.detail = "no applicable implication";
  }
  if (!flag.passed) {
    std::ostringstream os;
    os << "rule (" << flag.rule << ") violated: homogeneous=" << r.homogeneous << " count=" << r.minimal_set_count
       << " cover=" << r.cover_cardinality;
    r.falsifications.push_back({"implication", os.str(), {}});
  }
  return r;
}

void emit_diagnostics(const OmegaReport& report, std::ostream& out) {
  for (const auto& e : report.falsifications) {
    out << "falsification [" << e.kind << "] " << e.detail;
    if (!e.snapshots.empty()) {
      out << " snapshots:";
      for (std::size_t i : e.snapshots) out << ' ' << i;
    }
    out << '\n';
  }
}

void to_json(nlohmann::json& j, const OmegaReport& r) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : r.falsifications)
    events.push_back({{"kind", e.kind}, {"detail", e.detail}, {"snapshots", e.snapshots}});
  j = nlohmann::json{
      {"x0", r.x0 ? nlohmann::json(*r.x0) : nlohmann::json("none found")},
      {"x0_every_point", r.x0_every_point},
      {"x0_max_slope", r.x0_max_slope},
      {"homogeneous", r.homogeneous},
      {"minimal_set_count", r.minimal_set_count},
      {"connecting_detected", r.connecting_detected},
      {"connecting_evidence", r.evidence},
      {"cover_cardinality", r.cover_cardinality},
      {"fiber_coverage", r.fiber_coverage},
      {"fibers", r.fibers},
      {"snapshots", r.snapshots},
      {"trichotomy_case", to_string(r.trichotomy)},
      {"dim_u", r.dim_u},
      {"dim_c", r.dim_c},
      {"implication",
       {{"rule", r.implication.rule},
        {"applicable", r.implication.applicable},
        {"passed", r.implication.passed},
        {"detail", r.implication.detail}}},
      {"falsifications", events},
      {"tolerances", r.tolerances},
  };
}

}  // namespace rdcircle
