#include <catch_amalgamated.hpp>

#include <cmath>

#include "rdcircle/forcing.hpp"
#include "rdcircle/scenarios.hpp"
#include "rdcircle/solver.hpp"
#include "rdcircle/variational.hpp"

using namespace rdcircle;
using Catch::Matchers::WithinAbs;

namespace {

SolverConfig coarse() {
  SolverConfig cfg;
  cfg.n = 32;
  cfg.dt = 0.01;
  return cfg;
}

}  // namespace

TEST_CASE("linearization coefficients", "[variational][oracle]") {
  const auto u = GridFunction::sample(32, [](double x) { return 0.5 * std::sin(x); });
  const auto lc = linearize(ForcingField::autonomous_even(bistable_map()), u, 0.0);
  for (std::size_t j = 0; j < 32; ++j) {
    CHECK_THAT(lc.b[j], WithinAbs(1.0 - 3.0 * u[j] * u[j], 1e-14));
    CHECK(lc.a[j] == 0.0);
  }
  // a gradient-dependent field: h = u + 0.5 p², ∂f/∂p = p
  const auto grad = ForcingField::autonomous_even(EvenMap{"g", {{1.0, 1, 0}, {0.5, 0, 1}}, {}});
  const auto lg = linearize(grad, u, 0.0);
  const auto ux = deriv_x(u);
  for (std::size_t j = 0; j < 32; ++j) CHECK_THAT(lg.a[j], WithinAbs(ux[j], 1e-12));
}

TEST_CASE("random frames are orthonormal and seeded", "[variational]") {
  const auto f1 = random_frame(32, 5, 7);
  const auto f2 = random_frame(32, 5, 7);
  const auto f3 = random_frame(32, 5, 8);
  CHECK(gram_deviation(f1) < 1e-13);
  REQUIRE(f1.size() == 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 32; ++j) CHECK(f1.vectors[i][j] == f2.vectors[i][j]);
  CHECK(norm_sup(f1.vectors[0] - f3.vectors[0]) > 1e-3);
  CHECK_THROWS_AS(random_frame(32, 9, 1), std::invalid_argument);
}

TEST_CASE("dimension counts from exponents", "[variational]") {
  SpectrumEstimate s;
  s.gap_tol = 0.1;
  s.exponents = {1.0, 0.02, -0.03, -3.0};
  assign_dimensions(s);
  CHECK(s.dim_u == 1);
  CHECK(s.dim_c == 2);
  CHECK(s.n_u == 2);
  s.exponents = {-2.0, -3.0};
  assign_dimensions(s);
  CHECK(s.dim_u == 0);
  CHECK(s.dim_c == 0);
  CHECK(s.n_u == 0);
  s.exponents = {2.0, 1.0, 0.5};
  assign_dimensions(s);
  CHECK(s.dim_u == 3);
  CHECK(s.n_u == 4);
}

TEST_CASE("heat spectrum is -k^2 with double multiplicity", "[variational][oracle]") {
  const auto traj = evolve(GridFunction::constant(32, 0.3), ForcingField::zero(), 50.0, coarse(), 100000);
  const auto est = lyapunov_spectrum(traj, 5, 50.0);
  const double expected[] = {0.0, -1.0, -1.0, -4.0, -4.0};
  REQUIRE(est.exponents.size() == 5);
  // finite-horizon estimates carry an O(1/T) bias from the initial frame
  for (std::size_t i = 0; i < 5; ++i) CHECK_THAT(est.exponents[i], WithinAbs(expected[i], 1e-4));
  CHECK(est.dim_u == 0);
  CHECK(est.dim_c == 1);
  CHECK(std::is_sorted(est.exponents.rbegin(), est.exponents.rend()));
  CHECK_FALSE(est.convergence.empty());
  const auto cc = floquet_vs_frame_crosscheck(traj, 2, est);
  CHECK(cc.max_discrepancy < 1e-4);
}

TEST_CASE("bistable spectrum at u = 1", "[variational][oracle]") {
  // linearization at u ≡ 1: v_t = v_xx - 2v, exponents -2 - k²
  const auto s = bistable();
  const auto traj = evolve(GridFunction::constant(32, 1.0), s.field, 40.0, coarse(), 100000);
  const auto est = lyapunov_spectrum(traj, 3, 40.0);
  CHECK_THAT(est.exponents[0], WithinAbs(-2.0, 1e-4));
  CHECK_THAT(est.exponents[1], WithinAbs(-3.0, 1e-4));
  CHECK_THAT(est.exponents[2], WithinAbs(-3.0, 1e-4));
  CHECK(est.dim_c == 0);
}

TEST_CASE("Floquet modes along a homogeneous pendulum orbit", "[variational][oracle]") {
  const auto s = ex62();
  const auto traj = evolve(GridFunction::constant(32, 0.0), s.field, 60.0, coarse(), 100000);
  const auto modes = floquet_homogeneous(s.field, traj, 2, 60.0);
  REQUIRE(modes.size() == 5);
  // along u ≡ 0 the coefficient is b = -a(t), whose mean is -0.5
  CHECK_THAT(modes[0].exponent, WithinAbs(-0.5, 0.02));
  CHECK_THAT(modes[1].exponent - modes[0].exponent, WithinAbs(-1.0, 1e-9));
  CHECK_THAT(modes[3].exponent - modes[0].exponent, WithinAbs(-4.0, 1e-9));
  CHECK(modes[1].parity != modes[2].parity);
  const auto cc = floquet_vs_frame_crosscheck(traj, 2, 60.0);
  CHECK(cc.max_discrepancy < 0.05);
}

TEST_CASE("Floquet modes need a homogeneous orbit", "[variational]") {
  const auto u0 = GridFunction::sample(32, [](double x) { return 0.1 * std::sin(x); });
  const auto traj = evolve(u0, ForcingField::zero(), 20.0, coarse(), 100);
  CHECK_THROWS_AS(floquet_homogeneous(ForcingField::zero(), traj, 2, 20.0), std::invalid_argument);
}

TEST_CASE("spectrum needs enough QR cycles", "[variational]") {
  const auto traj = evolve(GridFunction::constant(32, 0.0), ForcingField::zero(), 5.0, coarse(), 100);
  CHECK_THROWS_AS(lyapunov_spectrum(traj, 3, 5.0), std::invalid_argument);
}

TEST_CASE("tangent frame stays orthonormal", "[variational][property]") {
  const auto s = bistable();
  const auto traj = evolve(s.u0.build(32), s.field, 3.0, coarse(), 10);
  const auto frame = evolve_tangent(traj, random_frame(32, 3, 5), 10);
  CHECK(gram_deviation(frame) < 1e-10);
  CHECK_THAT(frame.t, WithinAbs(3.0, 1e-12));
  REQUIRE(frame.log_growth.size() == 3);
  CHECK(frame.log_growth[0] >= frame.log_growth[1] - 1.0);
}

TEST_CASE("tangent evolution matches finite differences", "[variational][oracle]") {
  const auto s = ex62();
  const auto cfg = coarse();
  EtdStepper stepper(s.field, cfg);
  const auto u0 = GridFunction::sample(32, [](double x) { return 0.4 + 0.3 * std::cos(x); });
  const auto v = GridFunction::sample(32, [](double x) { return std::sin(2 * x) + 0.5; });
  auto flow = [&](const GridFunction& u, Spectrum* tan) {
    Spectrum c(u.coefficients().begin(), u.coefficients().end());
    std::span<Spectrum> ts = tan ? std::span<Spectrum>(tan, 1) : std::span<Spectrum>();
    for (int i = 0; i < 100; ++i) stepper.advance(c, i * cfg.dt, cfg.dt, ts);
    return GridFunction::from_coefficients(32, std::move(c));
  };
  Spectrum tv(v.coefficients().begin(), v.coefficients().end());
  const auto base = flow(u0, &tv);
  const auto tangent = GridFunction::from_coefficients(32, tv);
  double prev = 0.0;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const double err = norm_sup((flow(u0 + v * eps, nullptr) - base) * (1.0 / eps) - tangent);
    if (prev > 0.0) CHECK(err < 0.2 * prev);
    prev = err;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("spectrum JSON round trip", "[variational][io]") {
  SpectrumEstimate s;
  s.exponents = {0.1, -1.0};
  s.horizon = 10.0;
  s.gap_tol = 0.1;
  s.intervals = {{0.0, 0.2}, {-1.1, -0.9}};
  s.convergence = {{5.0, {0.2, -0.8}}};
  assign_dimensions(s);
  const nlohmann::json j = s;
  CHECK(j.contains("N_u"));
  const auto back = j.get<SpectrumEstimate>();
  CHECK(back.exponents == s.exponents);
  CHECK(back.intervals == s.intervals);
  CHECK(back.convergence == s.convergence);
  SpectrumOptions o;
  o.seed = 42;
  const nlohmann::json jo = o;
  CHECK(jo.get<SpectrumOptions>().seed == 42);
}
