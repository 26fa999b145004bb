#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rdcircle/forcing.hpp"
#include "rdcircle/grid_function.hpp"
#include "rdcircle/scenarios.hpp"
#include "rdcircle/solver.hpp"

using namespace rdcircle;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

GridFunction trig(std::size_t n) {
  return GridFunction::sample(n, [](double x) { return 0.4 + std::sin(x) - 0.3 * std::cos(3 * x) + 0.1 * std::sin(5 * x); });
}

double trig_exact(double x) { return 0.4 + std::sin(x) - 0.3 * std::cos(3 * x) + 0.1 * std::sin(5 * x); }
double trig_dx(double x) { return std::cos(x) + 0.9 * std::sin(3 * x) + 0.5 * std::cos(5 * x); }

}  // namespace

TEST_CASE("grid sizes", "[spectral]") {
  CHECK(is_valid_grid_size(16));
  CHECK(is_valid_grid_size(64));
  CHECK_FALSE(is_valid_grid_size(48));
  CHECK_FALSE(is_valid_grid_size(8));
  CHECK_THROWS_AS(GridFunction::from_values(std::vector<double>(24, 0.0)), std::invalid_argument);
}

TEST_CASE("spectral interpolation and derivatives are exact on trigonometric polynomials", "[spectral][oracle]") {
  const auto u = trig(32);
  const auto ux = deriv_x(u);
  for (double x : {0.0, 0.3, 1.234, 4.0, 6.2}) {
    CHECK_THAT(u(x), WithinAbs(trig_exact(x), 1e-13));
    CHECK_THAT(u.derivative_at(x), WithinAbs(trig_dx(x), 1e-12));
    CHECK_THAT(ux(x), WithinAbs(trig_dx(x), 1e-12));
    const double uxx = -std::sin(x) + 2.7 * std::cos(3 * x) - 2.5 * std::sin(5 * x);
    CHECK_THAT(u.second_derivative_at(x), WithinAbs(uxx, 1e-11));
  }
  const auto fine = u.refined(4);
  REQUIRE(fine.size() == 128);
  for (std::size_t j = 0; j < fine.size(); j += 7)
    CHECK_THAT(fine[j], WithinAbs(trig_exact(GridFunction::grid_point(128, j)), 1e-13));
}

TEST_CASE("coefficients round trip", "[spectral]") {
  const auto u = trig(64);
  const Spectrum c(u.coefficients().begin(), u.coefficients().end());
  const auto v = GridFunction::from_coefficients(64, c);
  for (std::size_t j = 0; j < 64; ++j) CHECK_THAT(v[j], WithinAbs(u[j], 1e-14));
  CHECK_THAT(c[0].real(), WithinAbs(0.4, 1e-15));
  CHECK_THROWS_AS(GridFunction::from_coefficients(64, Spectrum(10)), std::invalid_argument);
}

TEST_CASE("reflection and translation act as on functions", "[spectral][oracle]") {
  const auto u = trig(32);
  const double a = 0.77, s = 1.9;
  const auto r = reflect(u, a);
  const auto t = translate_space(u, s);
  for (double x : {0.1, 2.0, 5.5}) {
    CHECK_THAT(r(x), WithinAbs(trig_exact(2 * a - x), 1e-12));
    CHECK_THAT(t(x), WithinAbs(trig_exact(x + s), 1e-12));
  }
  // ρ_a is an involution
  const auto rr = reflect(r, a);
  CHECK(norm_sup(rr - u) < 1e-13);
}

TEST_CASE("norms", "[spectral]") {
  const auto u = GridFunction::sample(64, [](double x) { return 2.0 * std::sin(x); });
  CHECK_THAT(norm_sup(u), WithinAbs(2.0, 1e-3));
  CHECK_THAT(norm_l2(u), WithinAbs(std::sqrt(2.0), 1e-13));
  CHECK_THAT(norm_h1(u), WithinAbs(2.0 * std::sqrt(2.0), 1e-12));
  CHECK_THAT(norm_c1(u), WithinAbs(4.0, 1e-2));
  const auto mv = max_value(u);
  CHECK_THAT(mv.value, WithinAbs(2.0, 1e-12));
  CHECK_THAT(mv.argmax, WithinAbs(kPi / 2, 1e-6));
  const auto v = GridFunction::sample(64, [](double x) { return std::cos(x); });
  CHECK_THAT(inner_product(u.coefficients(), v.coefficients(), 64), WithinAbs(0.0, 1e-14));
  CHECK_THAT(inner_product(u.coefficients(), u.coefficients(), 64), WithinAbs(2.0, 1e-13));
}

TEST_CASE("step schedule lands on t_end", "[solver]") {
  const auto s = make_schedule(1.0, 0.3);
  CHECK(s.full_steps == 3);
  CHECK_THAT(s.last_step, WithinAbs(0.1, 1e-12));
  CHECK(s.total() == 4);
  CHECK(make_schedule(1.0, 0.25).last_step == 0.0);
  SolverConfig bad;
  bad.n = 48;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad.n = 32;
  bad.dt = -1.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("heat modes decay as exp(-k^2 t)", "[solver][oracle]") {
  SolverConfig cfg;
  cfg.n = 32;
  cfg.dt = 0.01;
  const auto u0 = GridFunction::sample(32, [](double x) { return 0.5 + std::cos(x) + 0.2 * std::sin(3 * x); });
  const auto traj = evolve(u0, ForcingField::zero(), 1.0, cfg, 100);
  const auto& u = traj.samples.back().state;
  for (double x : {0.0, 1.0, 3.0}) {
    const double exact = 0.5 + std::exp(-1.0) * std::cos(x) + 0.2 * std::exp(-9.0) * std::sin(3 * x);
    CHECK_THAT(u(x), WithinAbs(exact, 1e-13));
  }
}

TEST_CASE("closed-form linear solution", "[solver][oracle]") {
  const auto s = ex61(-1.0);
  SolverConfig cfg;
  cfg.n = 64;
  cfg.dt = 1e-3;
  const auto traj = evolve(s.initial(64), s.field, 3.0, cfg, 500);
  const auto f = example61_signal();
  for (const auto& smp : traj.samples) {
    const double psi = std::exp(integral_signal(f, smp.t));
    for (double x : {0.4, 1.5707963, 4.0}) CHECK_THAT(smp.state(x), WithinAbs(psi * std::sin(x), 1e-9));
  }
}

TEST_CASE("homogeneous bistable solution follows the logistic-type closed form", "[solver][oracle]") {
  SolverConfig cfg;
  cfg.n = 16;
  cfg.dt = 1e-3;
  const double c = 0.2;
  const auto traj = evolve(GridFunction::constant(16, c), ForcingField::autonomous_even(bistable_map()), 2.0, cfg, 1000);
  for (const auto& smp : traj.samples) {
    const double e = std::exp(2 * smp.t);
    const double exact = c * std::exp(smp.t) / std::sqrt(1 + c * c * (e - 1));
    CHECK_THAT(smp.state[3], WithinAbs(exact, 1e-10));
  }
}

TEST_CASE("ETDRK4 is fourth order in time", "[solver][property]") {
  const auto field = ForcingField::pendulum(QuasiPeriodicSum({{0.3, 1.0, 0.0}}, 0.5),
                                            QuasiPeriodicSum({{0.3, std::sqrt(2.0), 0.0}}));
  const auto u0 = GridFunction::sample(32, [](double x) { return 1.0 + 0.8 * std::sin(x) + 0.3 * std::cos(2 * x); });
  auto run = [&](double dt) {
    SolverConfig cfg;
    cfg.n = 32;
    cfg.dt = dt;
    return evolve(u0, field, 2.0, cfg, 1000000).samples.back().state;
  };
  const auto ref = run(1e-3);
  const double e1 = norm_sup(run(0.1) - ref);
  const double e2 = norm_sup(run(0.05) - ref);
  const double e3 = norm_sup(run(0.025) - ref);
  const double p1 = std::log2(e1 / e2), p2 = std::log2(e2 / e3);
  INFO("errors " << e1 << " " << e2 << " " << e3);
  CHECK(p1 > 3.5);
  CHECK(p2 > 3.5);
}

TEST_CASE("cocycle property of the skew-product flow", "[solver][property]") {
  const auto s = ex62();
  SolverConfig cfg;
  cfg.n = 32;
  cfg.dt = 0.01;
  const auto u0 = s.u0.build(32);
  const double t1 = 1.3, t2 = 2.1;
  EtdStepper direct(s.field, cfg);
  const auto whole = propagate(direct, u0, 0.0, t1 + t2);
  const auto mid = propagate(direct, u0, 0.0, t1);
  EtdStepper shifted(translate(s.field, t1), cfg);
  const auto rest = propagate(shifted, mid, 0.0, t2);
  CHECK(norm_sup(rest - whole) < 1e-12);
  // hull phase of g·t is the phase of the translated field
  const auto ph = hull_phase_at(s.field, t1);
  const auto tr = translate(s.field, t1);
  REQUIRE(ph.size() == tr.hull_phase().size());
  for (std::size_t i = 0; i < ph.size(); ++i) CHECK_THAT(phase_gap(ph[i], tr.hull_phase()[i]), WithinAbs(0.0, 1e-12));
}

TEST_CASE("trajectory sampling includes both ends", "[solver]") {
  SolverConfig cfg;
  cfg.n = 16;
  cfg.dt = 0.1;
  const auto traj = evolve(GridFunction::constant(16, 1.0), ForcingField::zero(), 1.05, cfg, 4);
  REQUIRE(traj.samples.size() == 4);
  CHECK(traj.samples.front().t == 0.0);
  CHECK_THAT(traj.samples[1].t, WithinAbs(0.4, 1e-12));
  CHECK_THAT(traj.samples.back().t, WithinAbs(1.05, 1e-12));
}

TEST_CASE("blow-up is reported", "[solver]") {
  SolverConfig cfg;
  cfg.n = 16;
  cfg.dt = 1e-3;
  const auto cubic = ForcingField::autonomous_even(EvenMap{"cubic", {{1.0, 3, 0}}, {}});
  CHECK_THROWS_AS(evolve(GridFunction::constant(16, 2.0), cubic, 1.0, cfg, 10), BlowUpError);
  try {
    evolve(GridFunction::constant(16, 2.0), cubic, 1.0, cfg, 10);
  } catch (const BlowUpError& e) {
    // u' = u³ from 2 blows up at t = 1/8; the threshold is crossed within a few steps of it
    CHECK_THAT(e.time(), WithinAbs(0.125, 0.01));
  }
}

TEST_CASE("sign-flipped diffusion breaks the closed form", "[solver][fault]") {
  const auto s = ex61(-1.0);
  SolverConfig cfg;
  cfg.n = 64;
  cfg.dt = 1e-3;
  cfg.diffusion = -1.0;
  bool broke = false;
  try {
    const auto traj = evolve(s.initial(64), s.field, 1.0, cfg, 100);
    const double psi = std::exp(integral_signal(example61_signal(), 1.0));
    broke = std::abs(traj.samples.back().state(1.0) - psi * std::sin(1.0)) > 1e-6;
  } catch (const BlowUpError&) {
    broke = true;
  }
  CHECK(broke);
}
