#include "rdcircle/zero_number.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/tools/roots.hpp>

namespace rdcircle {

namespace {

template <class F>
double bracketed_root(F&& f, double lo, double hi, double f_lo, double f_hi) {
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) return 0.5 * (lo + hi);
  std::uintmax_t iters = 100;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi,
                                                   boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

int sign_of(double v, double tol) {
  if (std::abs(v) < tol) return 0;
  return v > 0.0 ? 1 : -1;
}

// Critical points of u: zeros of u_x on the refined grid, polished.
std::vector<double> critical_points(const GridFunction& u, std::size_t refine) {
  const GridFunction ux = deriv_x(u);
  const auto d = ux.refined(refine);
  const std::size_t m = d.size();
  const double h = kTwoPi / static_cast<double>(m);
  std::vector<double> out;
  auto f = [&](double x) { return u.derivative_at(x); };
  for (std::size_t j = 0; j < m; ++j) {
    const double a = d[j];
    const double b = d[(j + 1) % m];
    if (a == 0.0) {
      out.push_back(h * static_cast<double>(j));
    } else if ((a > 0.0) != (b > 0.0) && b != 0.0) {
      const double lo = h * static_cast<double>(j);
      out.push_back(wrap_phase(bracketed_root(f, lo, lo + h, f(lo), f(lo + h))));
    }
  }
  return out;
}

}  // namespace

ZeroCount zero_count(const GridFunction& u, double tol_val, double tol_slope) {
  constexpr std::size_t kRefine = 4;
  const auto v = u.refined(kRefine);
  const auto d = deriv_x(u).refined(kRefine);
  const std::size_t m = v.size();
  const double h = kTwoPi / static_cast<double>(m);

  double sup = 0.0;
  for (double x : v) sup = std::max(sup, std::abs(x));
  if (sup < tol_val) throw std::domain_error("numerically zero function");

  std::vector<int> s(m);
  for (std::size_t j = 0; j < m; ++j) s[j] = sign_of(v[j], tol_val);
  std::size_t start = 0;
  while (s[start] == 0) ++start;

  ZeroCount zc;
  double margin = std::numeric_limits<double>::infinity();
  auto f = [&](double x) { return u(x); };

  // Walk once around the circle from a point where u is clearly nonzero.
  std::size_t p = start;
  std::size_t p_step = 0;
  for (std::size_t step = 1; step <= m; ++step) {
    const std::size_t q = (start + step) % m;
    if (s[q] == 0) continue;
    const std::size_t run = step - p_step - 1;
    const double xp = h * static_cast<double>(start + p_step);
    const double xq = h * static_cast<double>(start + step);
    if (s[q] != s[p]) {
      const double root = bracketed_root(f, xp, xq, u(xp), u(xq));
      const double slope = std::abs(u.derivative_at(root));
      zc.locations.push_back(wrap_phase(root));
      if (run >= 2 || !(slope > tol_slope)) zc.simple = false;
      margin = std::min(margin, slope);
    } else if (run >= 1) {
      // |u| dips below tol_val without a sign change: a touching zero.
      double best = xp + h;
      double best_abs = std::numeric_limits<double>::infinity();
      for (std::size_t r = 1; r <= run; ++r) {
        const double x = xp + h * static_cast<double>(r);
        if (std::abs(u(x)) < best_abs) {
          best_abs = std::abs(u(x));
          best = x;
        }
      }
      zc.locations.push_back(wrap_phase(best));
      zc.simple = false;
    } else {
      // Adjacent samples of one sign: |u| may still dip to a tangency or
      // through a pair of zeros closer together than the grid spacing.
      const double sg = static_cast<double>(s[p]);
      const double dp = d[p];
      const double dq = d[q];
      if (sg * dp < 0.0 && sg * dq > 0.0) {
        auto fx = [&](double x) { return u.derivative_at(x); };
        const double xc = bracketed_root(fx, xp, xq, dp, dq);
        const double uc = u(xc);
        if (std::abs(uc) < tol_val) {
          zc.locations.push_back(wrap_phase(xc));
          zc.simple = false;
        } else if ((uc > 0.0) != (sg > 0.0)) {
          for (const auto& [lo, hi] : {std::pair{xp, xc}, std::pair{xc, xq}}) {
            const double root = bracketed_root(f, lo, hi, u(lo), u(hi));
            const double slope = std::abs(u.derivative_at(root));
            zc.locations.push_back(wrap_phase(root));
            if (!(slope > tol_slope)) zc.simple = false;
            margin = std::min(margin, slope);
          }
        }
      }
    }
    p = q;
    p_step = step;
  }

  std::sort(zc.locations.begin(), zc.locations.end());
  zc.locations.erase(std::unique(zc.locations.begin(), zc.locations.end(),
                                 [&](double a, double b) { return std::abs(a - b) < 1e-14; }),
                     zc.locations.end());
  zc.count = zc.locations.size();
  zc.margin = zc.simple && zc.count > 0 ? margin : 0.0;
  return zc;
}

double perturbation_radius(const GridFunction& u) {
  const double sup = norm_sup(u);
  if (sup == 0.0) throw std::domain_error("no stable radius");
  const ZeroCount zc = zero_count(u, 1e-9 * sup, 1e-6 * sup);
  if (!zc.simple) throw std::domain_error("no stable radius");

  constexpr std::size_t kRefine = 16;
  const GridFunction ux = deriv_x(u);
  const GridFunction uxx = deriv_x(ux);
  const auto v = u.refined(kRefine);
  const auto d = ux.refined(kRefine);
  const std::size_t m = v.size();
  const double h = kTwoPi / static_cast<double>(m);
  // Between dense samples a minimum can undershoot by at most sup|derivative|·h/2.
  const double slack0 = norm_sup(ux) * 0.5 * h;
  const double slack1 = norm_sup(uxx) * 0.5 * h;

  if (zc.count == 0) {
    double lo = std::numeric_limits<double>::infinity();
    for (double x : v) lo = std::min(lo, std::abs(x));
    const double delta = lo - slack0;
    if (!(delta > 0.0)) throw std::domain_error("no stable radius");
    return delta;
  }

  const auto& roots = zc.locations;
  double gap = kTwoPi;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    const double next = i + 1 < roots.size() ? roots[i + 1] : roots.front() + kTwoPi;
    gap = std::min(gap, next - roots[i]);
  }
  const double half_gap = 0.5 * gap;

  auto nearest_root_distance = [&](double x) {
    double best = kTwoPi;
    for (double r : roots) best = std::min(best, phase_gap(x, r));
    return best;
  };
  std::vector<double> dist(m);
  for (std::size_t j = 0; j < m; ++j) dist[j] = nearest_root_distance(h * static_cast<double>(j));

  double best = 0.0;
  constexpr int kCandidates = 40;
  for (int i = 1; i < kCandidates; ++i) {
    const double rho = half_gap * i / kCandidates;
    double m0 = std::numeric_limits<double>::infinity();
    double m1 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (dist[j] <= rho)
        m1 = std::min(m1, std::abs(d[j]));
      else
        m0 = std::min(m0, std::abs(v[j]));
    }
    best = std::max(best, std::min(m0 - slack0, m1 - slack1));
  }
  if (!(best > 0.0)) throw std::domain_error("no stable radius");
  return best;
}

// ---------------------------------------------------------------------------

std::string to_string(LapStatus s) {
  switch (s) {
    case LapStatus::certified: return "certified";
    case LapStatus::indeterminate: return "indeterminate";
    case LapStatus::collapsed: return "collapsed";
  }
  return "unknown";
}

bool LapReport::all_witnessed() const {
  return std::all_of(drops.begin(), drops.end(), [](const DropEvent& e) { return e.witness_ok; });
}

void to_json(nlohmann::json& j, const DropEvent& e) {
  j = nlohmann::json{{"t_lo", e.t_lo},
                     {"t_hi", e.t_hi},
                     {"before", e.before},
                     {"after", e.after},
                     {"witness_ok", e.witness_ok},
                     {"witness_value", e.witness_value},
                     {"witness_slope", e.witness_slope}};
  j["witness"] = e.witness ? nlohmann::json(*e.witness) : nlohmann::json(nullptr);
}

namespace {

struct Classified {
  LapStatus status = LapStatus::indeterminate;
  ZeroCount zc;
};

Classified classify_difference(const GridFunction& a, const GridFunction& b, const LapTolerances& tols) {
  const GridFunction w = a - b;
  const double wsup = norm_sup(w);
  const double scale = std::max({1.0, norm_sup(a), norm_sup(b)});
  Classified c;
  if (wsup < tols.collapse * scale) {
    c.status = LapStatus::collapsed;
    return c;
  }
  c.zc = zero_count(w, tols.rel_val * wsup, tols.rel_slope * wsup);
  c.status = c.zc.simple ? LapStatus::certified : LapStatus::indeterminate;
  return c;
}

// Pre-drop count level and whether a state has dropped below it.
bool dropped(const GridFunction& a, const GridFunction& b, std::size_t level, const LapTolerances& tols) {
  const Classified c = classify_difference(a, b, tols);
  return c.status == LapStatus::collapsed || (c.status == LapStatus::certified && c.zc.count < level);
}

// Witness for a merging zero pair inside [lo, hi]: at a critical point of w_lo whose
// value changes sign by hi, interpolate the two states linearly in time to the
// instant that value vanishes and measure |w| and |w_x| there.
void find_witness(const GridFunction& w_lo, const GridFunction& w_hi, const LapTolerances& tols, DropEvent& ev) {
  const double wsup = norm_sup(w_lo);
  const double tol_val = tols.rel_val * wsup;
  const double tol_slope = tols.rel_slope * wsup;
  double best_score = std::numeric_limits<double>::infinity();
  for (double c : critical_points(w_lo, 4)) {
    const double e_lo = w_lo(c);
    const double e_hi = w_hi(c);
    GridFunction w = w_lo;
    if ((e_lo > 0.0) != (e_hi > 0.0) && e_lo != e_hi) {
      const double theta = e_lo / (e_lo - e_hi);
      w = w_lo * (1.0 - theta) + w_hi * theta;
    }
    double x = c;
    for (int it = 0; it < 6; ++it) {
      const double d2 = w.second_derivative_at(x);
      if (d2 == 0.0) break;
      const double nx = x - w.derivative_at(x) / d2;
      if (std::abs(nx - c) > 0.1) break;
      x = nx;
    }
    const double val = std::abs(w(x));
    const double slope = std::abs(w.derivative_at(x));
    const double score = std::max(val / tol_val, slope / tol_slope);
    if (score < best_score) {
      best_score = score;
      ev.witness = wrap_phase(x);
      ev.witness_value = val;
      ev.witness_slope = slope;
      ev.witness_ok = val < tols.witness_factor * tol_val && slope < tols.witness_factor * tol_slope;
    }
  }
}

void refine_drop(const Trajectory& ta, const Trajectory& tb, std::size_t lo_idx, std::size_t level,
                 const LapTolerances& tols, DropEvent& ev) {
  EtdStepper sa(ta.field, ta.config);
  EtdStepper sb(tb.field, tb.config);
  const double dt = ta.config.dt;
  GridFunction a = ta.samples[lo_idx].state;
  GridFunction b = tb.samples[lo_idx].state;
  double t = ta.samples[lo_idx].t;
  const double t_end = ev.t_hi;

  // March step by step to the first step that drops.
  GridFunction a_next, b_next;
  double h = dt;
  while (true) {
    h = std::min(dt, t_end - t);
    if (h <= 1e-15) return;
    a_next = sa.step(a, t, h);
    b_next = sb.step(b, t, h);
    if (dropped(a_next, b_next, level, tols)) break;
    a = a_next;
    b = b_next;
    t += h;
  }

  // Bisect inside the step; every trial restarts from the last pre-drop state.
  double h_lo = 0.0;
  double h_hi = h;
  GridFunction a_hi = a_next;
  GridFunction b_hi = b_next;
  GridFunction a_lo = a;
  GridFunction b_lo = b;
  for (std::size_t it = 0; it < tols.max_refine; ++it) {
    const double mid = 0.5 * (h_lo + h_hi);
    GridFunction am = sa.step(a, t, mid);
    GridFunction bm = sb.step(b, t, mid);
    if (dropped(am, bm, level, tols)) {
      h_hi = mid;
      a_hi = std::move(am);
      b_hi = std::move(bm);
    } else {
      h_lo = mid;
      a_lo = std::move(am);
      b_lo = std::move(bm);
    }
  }
  ev.t_lo = t + h_lo;
  ev.t_hi = t + h_hi;
  find_witness(a_lo - b_lo, a_hi - b_hi, tols, ev);
}

}  // namespace

LapReport lap_monitor(const Trajectory& ta, const Trajectory& tb, const LapTolerances& tols) {
  if (ta.samples.size() != tb.samples.size() || ta.samples.empty())
    throw std::invalid_argument("trajectories must share sample times");
  if (ta.config.n != tb.config.n) throw std::invalid_argument("trajectories must share the grid");
  if (ta.field.kind() != tb.field.kind() ||
      !std::equal(ta.field.hull_phase().begin(), ta.field.hull_phase().end(), tb.field.hull_phase().begin(),
                  tb.field.hull_phase().end()))
    throw std::invalid_argument("trajectories must share the forcing field");
  bool distinct = false;
  for (std::size_t i = 0; i < ta.samples.size(); ++i) {
    if (std::abs(ta.samples[i].t - tb.samples[i].t) > 1e-12 * std::max(1.0, ta.samples[i].t))
      throw std::invalid_argument("trajectories must share sample times");
    const auto va = ta.samples[i].state.values();
    const auto vb = tb.samples[i].state.values();
    if (!std::equal(va.begin(), va.end(), vb.begin())) distinct = true;
  }
  if (!distinct) throw std::invalid_argument("trajectories are identical");

  LapReport report;
  std::optional<std::size_t> last_certified;
  std::vector<std::size_t> pending;  // indeterminate samples since the last certified one
  for (std::size_t i = 0; i < ta.samples.size(); ++i) {
    const Classified c = classify_difference(ta.samples[i].state, tb.samples[i].state, tols);
    LapSample s;
    s.t = ta.samples[i].t;
    s.status = c.status;
    s.count = c.zc.count;
    s.simple = c.status == LapStatus::certified;
    report.samples.push_back(s);
    if (c.status == LapStatus::indeterminate) {
      pending.push_back(i);
      continue;
    }
    if (c.status == LapStatus::collapsed) continue;

    if (last_certified) {
      const std::size_t before = report.samples[*last_certified].count;
      if (s.count < before) {
        DropEvent ev;
        ev.t_lo = report.samples[*last_certified].t;
        ev.t_hi = s.t;
        ev.before = before;
        ev.after = s.count;
        refine_drop(ta, tb, *last_certified, before, tols, ev);
        report.drops.push_back(ev);
      } else {
        if (s.count > before) report.increases.push_back(i);
        report.uncertifiable.insert(report.uncertifiable.end(), pending.begin(), pending.end());
      }
    }
    pending.clear();
    last_certified = i;
  }
  report.uncertifiable.insert(report.uncertifiable.end(), pending.begin(), pending.end());
  return report;
}

}  // namespace rdcircle
