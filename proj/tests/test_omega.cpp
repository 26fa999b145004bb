#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "rdcircle/forcing.hpp"
#include "rdcircle/omega_limit.hpp"
#include "rdcircle/scenarios.hpp"
#include "rdcircle/solver.hpp"

using namespace rdcircle;
using Catch::Matchers::WithinAbs;

namespace {

// Snapshots on a one-frequency hull (period 2π) visited at four phases; the
// state of visit i is produced by `state(i)`.
template <class F>
OmegaSample synthetic(std::size_t count, F state) {
  OmegaSample s;
  s.field = ForcingField::scalar_linear(QuasiPeriodicSum({{0.5, 1.0, 0.0}}), 0.0);
  s.config.n = 16;
  const double step = kPi / 2.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = 100.0 + step * static_cast<double>(i);
    s.snapshots.push_back({t, state(i), hull_phase_at(s.field, t)});
  }
  s.t_transient = 100.0;
  return s;
}

GridFunction level(double c) { return GridFunction::constant(16, c); }

SpectrumEstimate dims(std::size_t u, std::size_t c) {
  SpectrumEstimate s;
  s.dim_u = u;
  s.dim_c = c;
  return s;
}

}  // namespace

TEST_CASE("omega sampling", "[omega]") {
  SolverConfig cfg;
  cfg.n = 16;
  cfg.dt = 0.1;
  const auto traj = evolve(GridFunction::constant(16, 1.0), ForcingField::zero(), 20.0, cfg, 5);
  const auto s = sample_omega(traj, 5.0, 10);
  CHECK(s.size() == 15);
  CHECK(s.snapshots.front().t > 5.0);
  CHECK_THROWS_AS(sample_omega(traj, 15.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(sample_omega(traj, 5.0, 7), std::invalid_argument);
}

TEST_CASE("common critical point of a family sharing a symmetry axis", "[omega][oracle]") {
  const auto s = synthetic(40, [](std::size_t i) {
    const double c = 0.2 + 0.05 * static_cast<double>(i % 7);
    return GridFunction::sample(16, [c](double x) { return c * std::cos(x - 0.7) + 0.1 * c * c * std::cos(2 * (x - 0.7)); });
  });
  const auto cp = find_common_critical_point(s, 1e-4);
  REQUIRE(cp.x0);
  CHECK_FALSE(cp.every_point);
  const double off = std::min({phase_gap(*cp.x0, 0.7), phase_gap(*cp.x0, 0.7 + kPi)});
  CHECK(off < 1e-8);
  CHECK(cp.max_slope < 1e-7);
  CHECK(reflection_defect(s, *cp.x0) < 1e-8);
  CHECK_FALSE(homogeneity_test(s, 1e-6));
}

TEST_CASE("no common critical point for rotating profiles", "[omega]") {
  const auto s = synthetic(40, [](std::size_t i) {
    const double shift = 0.3 * static_cast<double>(i);
    return GridFunction::sample(16, [shift](double x) { return std::cos(x - shift); });
  });
  const auto cp = find_common_critical_point(s, 1e-4);
  CHECK_FALSE(cp.x0);
  CHECK(cp.max_slope > 0.1);
}

TEST_CASE("homogeneous samples qualify everywhere", "[omega]") {
  const auto s = synthetic(40, [](std::size_t i) { return level(1.0 + 0.01 * static_cast<double>(i % 4)); });
  CHECK(homogeneity_test(s, 1e-6));
  const auto cp = find_common_critical_point(s, 1e-4);
  CHECK(cp.every_point);
}

TEST_CASE("one recurrent state per fiber is one minimal set", "[omega]") {
  const auto s = synthetic(360, [](std::size_t i) { return level(0.1 * static_cast<double>(i % 4)); });
  const OmegaTolerances tols;
  const auto m = count_minimal_sets(s, 0.0, tols);
  CHECK(m.count == 1);
  CHECK_FALSE(m.connecting_detected);
  CHECK(cover_test(s, m, tols).cardinality == 1);
  const auto a = analyze_omega(s, tols);
  const auto r = classify(a, dims(0, 0));
  CHECK(r.trichotomy == Trichotomy::minimal);
  CHECK(r.implication.rule == "a");
  CHECK(r.flags_pass());
}

TEST_CASE("two recurrent levels with a transit state", "[omega]") {
  // fiber members alternate between ±0.5; a single visit at 0 never recurs
  const auto s = synthetic(360, [](std::size_t i) {
    if (i == 181) return level(0.0);
    return level((i / 4) % 2 == 0 ? 0.5 : -0.5);
  });
  const OmegaTolerances tols;
  const auto m = count_minimal_sets(s, 0.0, tols);
  CHECK(m.count == 2);
  CHECK(m.connecting_detected);
  REQUIRE_FALSE(m.connecting.empty());
  CHECK(m.connecting.front() == 181);
  const auto r = classify(analyze_omega(s, tols), dims(1, 2));
  CHECK(r.trichotomy == Trichotomy::two_minimal_connecting);
  CHECK(r.implication.rule == "none");
  CHECK(r.implication.detail == "no applicable implication");
  CHECK(r.falsifications.empty());
}

TEST_CASE("three recurrent levels raise a falsification event", "[omega]") {
  const auto s = synthetic(360, [](std::size_t i) {
    const double v[] = {0.5, 0.0, -0.5};
    return level(v[(i / 4) % 3]);
  });
  const OmegaTolerances tols;
  const auto a = analyze_omega(s, tols);
  CHECK(a.minimal.count == 3);
  const auto r = classify(a, dims(1, 2));
  CHECK(r.minimal_set_count == 3);
  CHECK(r.trichotomy == Trichotomy::undetermined);
  REQUIRE_FALSE(r.falsifications.empty());
  CHECK(r.falsifications.front().kind == "minimal-set count");
  CHECK_FALSE(r.falsifications.front().snapshots.empty());
  CHECK_FALSE(r.flags_pass());
  std::ostringstream os;
  emit_diagnostics(r, os);
  CHECK(os.str().find("minimal-set count") != std::string::npos);
}

TEST_CASE("too little recurrence is an error", "[omega]") {
  const auto s = synthetic(8, [](std::size_t) { return level(0.1); });
  CHECK_THROWS_AS(count_minimal_sets(s, 0.0, OmegaTolerances{}), std::runtime_error);
}

TEST_CASE("implication rules", "[omega]") {
  OmegaAnalysis a;
  a.homogeneous = true;
  a.minimal.count = 1;
  a.cover.cardinality = 1;
  a.critical.every_point = true;
  CHECK(classify(a, dims(0, 0)).implication.passed);
  CHECK(classify(a, dims(0, 1)).implication.rule == "c");
  CHECK(classify(a, dims(0, 1)).implication.passed);
  const auto b = classify(a, dims(1, 1));
  CHECK(b.implication.rule == "b");
  CHECK_FALSE(b.implication.passed);
  REQUIRE_FALSE(b.falsifications.empty());
  CHECK(b.falsifications.back().kind == "implication");

  a.homogeneous = false;
  a.critical.every_point = false;
  a.critical.x0 = 1.0;
  const auto fa = classify(a, dims(0, 0));
  CHECK(fa.implication.rule == "a");
  CHECK_FALSE(fa.implication.passed);
  CHECK(classify(a, dims(1, 1)).implication.passed);
  CHECK_FALSE(classify(a, dims(0, 1)).implication.passed);
  const auto none = classify(a, dims(1, 2));
  CHECK_FALSE(none.implication.applicable);
  CHECK(none.implication.passed);

  a.critical.x0.reset();
  const auto missing = classify(a, dims(1, 2));
  REQUIRE(missing.falsifications.size() == 1);
  CHECK(missing.falsifications[0].kind == "common critical point");
}

TEST_CASE("trichotomy labels", "[omega]") {
  CHECK(to_string(Trichotomy::minimal) == "(i) minimal");
  CHECK(to_string(Trichotomy::one_minimal_connecting) == "(ii) one-minimal-plus-connecting");
  CHECK(to_string(Trichotomy::two_minimal_connecting) == "(iii) two-minimal-plus-connecting");
  CHECK(trichotomy_case(1, true) == Trichotomy::one_minimal_connecting);
  CHECK(trichotomy_case(0, false) == Trichotomy::undetermined);
}

TEST_CASE("report JSON", "[omega][io]") {
  OmegaReport r;
  nlohmann::json j = r;
  CHECK(j["x0"] == "none found");
  CHECK(j["trichotomy_case"] == "undetermined");
  CHECK(j["connecting_evidence"] == "forward");
  r.x0 = 1.5;
  j = r;
  CHECK(j["x0"] == 1.5);
  OmegaTolerances t;
  t.hull_tol = 0.5;
  const nlohmann::json jt = t;
  CHECK(jt.get<OmegaTolerances>() == t);
}

TEST_CASE("proximal pairs", "[omega]") {
  SolverConfig cfg;
  cfg.n = 16;
  cfg.dt = 0.05;
  const auto u1 = GridFunction::sample(16, [](double x) { return 0.2 + std::cos(x); });
  const auto u2 = GridFunction::sample(16, [](double x) { return 0.2 - std::sin(2 * x); });
  const auto u3 = GridFunction::constant(16, 1.0);
  // both decay to the mean 0.2; the C¹ gap is about 2e^{-t}, above 1e-3 for t < 7
  const auto t1 = evolve(u1, ForcingField::zero(), 12.0, cfg, 4);
  const auto t2 = evolve(u2, ForcingField::zero(), 12.0, cfg, 4);
  const auto t3 = evolve(u3, ForcingField::zero(), 12.0, cfg, 4);
  const auto near = proximal_pair_scan(t1, t2, 1e-3);
  CHECK(near.forward_dips > 0);
  CHECK(near.backward_dips == 0);
  CHECK_FALSE(near.two_sided);
  const auto far = proximal_pair_scan(t1, t3, 1e-3);
  CHECK(far.forward_dips == 0);
  CHECK_THAT(far.forward_min, WithinAbs(0.8, 1e-4));
  CHECK_THROWS_AS(proximal_pair_scan(t1, t1, 1e-3), std::invalid_argument);
}

TEST_CASE("sign probes see profiles that flip", "[omega]") {
  const auto flipping = synthetic(40, [](std::size_t i) {
    const double c = i % 2 == 0 ? 1.0 : -1.0;
    return GridFunction::sample(16, [c](double x) { return c * std::cos(x); });
  });
  CHECK_FALSE(unstable_sign_probes(flipping, 64, 1e-6).empty());
  const auto steady = synthetic(40, [](std::size_t) {
    return GridFunction::sample(16, [](double x) { return std::cos(x); });
  });
  CHECK(unstable_sign_probes(steady, 64, 1e-6).empty());
}

TEST_CASE("bistable omega limit is a homogeneous minimal set", "[omega]") {
  const auto s = bistable();
  const auto traj = evolve(s.u0.build(s.omega.config.n), s.field, s.omega.t_end, s.omega.config, s.omega.stride);
  const auto sample = sample_omega(traj, s.omega.t_transient, s.omega.stride);
  const auto a = analyze_omega(sample, s.omega.tolerances);
  CHECK(a.homogeneous);
  CHECK(a.minimal.count == 1);
  CHECK_FALSE(a.minimal.connecting_detected);
  CHECK(a.cover.cardinality == 1);
}
