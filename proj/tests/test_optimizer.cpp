#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "mfsc/control.hpp"
#include "mfsc/cost.hpp"
#include "mfsc/error.hpp"
#include "mfsc/kernels.hpp"
#include "mfsc/measures.hpp"
#include "mfsc/optimizer.hpp"
#include "mfsc/random.hpp"

using namespace mfsc;

namespace {

OptimalControlProblem random_problem(std::uint64_t seed, std::size_t m, std::size_t n, int d, std::size_t cells,
                                     CostFamily family) {
  StreamRng rng(seed, 0);
  OptimalControlProblem p;
  p.initial = Configuration(m, n, d);
  for (auto& x : p.initial.state()) x = rng.uniform(-1, 1);
  p.kernel = Kernel::cucker_smale(d, {1.0, 1.0, 0.5, -1.0});
  p.cost.family = family;
  p.cost.weight = 0.5 + rng.uniform();
  p.cost.target_y.assign(d, 0.5);
  p.cost.target_w.assign(d, -0.25);
  p.horizon = 1.0;
  p.cells = cells;
  p.radius = 1.0;
  p.n_steps = 8 * cells;
  p.options.backend = Backend::serial;
  return p;
}

ControlSignal random_interior_control(const OptimalControlProblem& p, std::uint64_t seed) {
  StreamRng rng(seed, 7);
  ControlSignal u = p.zero_control();
  for (auto& x : u.values()) x = rng.uniform(-0.3, 0.3);
  return u;
}

}  // namespace

TEST_CASE("prox_l1_ball") {
  const double inf = std::numeric_limits<double>::infinity();
  const auto a = prox_l1_ball(std::vector<double>{1.2, 1.6}, 0.5, inf);
  CHECK(std::hypot(a[0], a[1]) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(a[0] / a[1] == doctest::Approx(0.75));

  const auto z = prox_l1_ball(std::vector<double>{0.3, -0.4}, 0.5, 1.0);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
  CHECK_FALSE(std::signbit(z[1]));

  const auto p = prox_l1_ball(std::vector<double>{3, 4}, 0.0, 1.0);
  CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-15));

  const auto zero = prox_l1_ball(std::vector<double>{0, 0}, 0.0, 1.0);
  CHECK(zero[0] == 0.0);
  CHECK_THROWS_AS(prox_l1_ball(std::vector<double>{1}, -1.0, 1.0), InvalidInput);
}

TEST_CASE("zero running cost has zero gradient and a trivial solve") {
  auto p = random_problem(1, 2, 3, 2, 4, CostFamily::velocity_consensus);
  p.cost.weight = 0.0;
  const auto u = random_interior_control(p, 1);
  const auto ev = smooth_cost_and_gradient(p, u);
  CHECK(ev.value == 0.0);
  for (double g : ev.gradient) CHECK(g == 0.0);
  const auto rep = solve(p, u);
  CHECK(rep.cost == 0.0);
  CHECK(rep.sparsity == 1.0);
  for (double x : rep.control.values()) CHECK(x == 0.0);
  auto tiny = random_problem(2, 1, 2, 1, 2, CostFamily::velocity_consensus);
  tiny.cost.weight = 0.0;
  const auto bf = brute_force_solve(tiny, 5);
  CHECK(bf.cost == 0.0);
  for (double x : bf.control.values()) CHECK(x == 0.0);
}

TEST_CASE("leader tracking on w matches scalar calculus") {
  // m = 1, N = 0, zero kernel, one cell: w(t) = w0 + c t exactly, so the
  // discrete smooth cost is sum_n omega_n (w0 + c t_n - w*)^2.
  const double w0 = 0.4, wstar = -0.3, c = 0.2, T = 1.3;
  OptimalControlProblem p;
  p.initial = Configuration::from_parts(1, std::vector<double>{0.1}, std::vector<double>{w0}, {}, {});
  p.kernel = Kernel::zero(1);
  p.cost.family = CostFamily::leader_tracking;
  p.cost.weight = 1.0;
  p.cost.position_weight = 0.0;
  p.cost.target_y = {0.0};
  p.cost.target_w = {wstar};
  p.horizon = T;
  p.cells = 1;
  p.radius = 1.0;
  const ControlSignal u(1, 1, 1, T, 1.0, {c});
  const auto ev = smooth_cost_and_gradient(p, u);
  const auto times = p.grid().instants;
  const auto omega = trapezoid_weights(times);
  double value = 0.0, grad = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double e = w0 + c * times[j] - wstar;
    value += omega[j] * e * e;
    grad += omega[j] * 2.0 * e * times[j];
  }
  CHECK(ev.value == doctest::Approx(value).epsilon(1e-13));
  CHECK(ev.gradient[0] == doctest::Approx(grad).epsilon(1e-13));
  // Continuous value 2 ((w0 - w*) T^2 / 2 + c T^3 / 3) up to trapezoid error.
  const double cont = 2.0 * ((w0 - wstar) * T * T / 2.0 + c * T * T * T / 3.0);
  CHECK(ev.gradient[0] == doctest::Approx(cont).epsilon(1e-4));
}

TEST_CASE("adjoint gradient matches central differences") {
  const CostFamily families[] = {CostFamily::velocity_consensus, CostFamily::leader_tracking};
  for (int inst = 0; inst < 12; ++inst) {
    const std::size_t m = 1 + inst % 2, n = 2 + static_cast<std::size_t>(inst % 3) * 5;
    const int d = 1 + (inst / 2) % 2;
    const std::size_t cells = 1 + static_cast<std::size_t>(inst % 4) * 2;
    auto p = random_problem(50 + inst, m, n, d, cells, families[inst % 2]);
    const auto u = random_interior_control(p, 50 + inst);
    const auto ev = smooth_cost_and_gradient(p, u);
    double gmax = 0.0, err = 0.0;
    for (std::size_t i = 0; i < ev.gradient.size(); ++i) {
      ControlSignal hi = u, lo = u;
      hi.values()[i] += 1e-5;
      lo.values()[i] -= 1e-5;
      const double fd = (smooth_cost(p, hi) - smooth_cost(p, lo)) / 2e-5;
      gmax = std::max(gmax, std::fabs(ev.gradient[i]));
      err = std::max(err, std::fabs(ev.gradient[i] - fd));
    }
    CHECK(gmax > 0.0);
    CHECK(err <= 1e-6 * gmax);
  }
}

TEST_CASE("measure target gradient matches differences away from ties") {
  auto p = random_problem(70, 1, 4, 1, 2, CostFamily::measure_target);
  p.cost.target = EmpiricalMeasure::uniform(1, {2.0, 1.0, -2.0, 0.5, 2.5, -1.0});
  const auto u = random_interior_control(p, 70);
  const auto ev = smooth_cost_and_gradient(p, u);
  for (std::size_t i = 0; i < ev.gradient.size(); ++i) {
    ControlSignal hi = u, lo = u;
    hi.values()[i] += 1e-6;
    lo.values()[i] -= 1e-6;
    const double fd = (smooth_cost(p, hi) - smooth_cost(p, lo)) / 2e-6;
    CHECK(ev.gradient[i] == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("solve: monotone history, admissible iterates, exact zeros") {
  auto p = random_problem(80, 2, 6, 2, 4, CostFamily::leader_tracking);
  p.cost.weight = 1.0;
  const auto rep = solve(p);
  REQUIRE(rep.history.size() >= 2);
  for (std::size_t k = 1; k < rep.history.size(); ++k) CHECK(rep.history[k] <= rep.history[k - 1]);
  CHECK(rep.control.admissible(1e-12));
  CHECK(rep.cost == doctest::Approx(objective(p, rep.control)).epsilon(1e-14));
  CHECK(rep.cost <= rep.history.front());
  CHECK(rep.sparsity >= 0.0);
  CHECK(rep.sparsity <= 1.0);
  for (std::size_t c = 0; c < p.cells; ++c) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto v = rep.control.value(c, k);
      const bool zero = v[0] == 0.0 && v[1] == 0.0;
      // A zero cell is the bit pattern of +0.0, never a tiny residue.
      if (zero) CHECK_FALSE(std::signbit(v[0]));
      if (!zero) CHECK(std::hypot(v[0], v[1]) > 1e-12);
    }
  }
}

TEST_CASE("step rules reach the same optimum") {
  auto p = random_problem(81, 2, 6, 1, 4, CostFamily::velocity_consensus);
  p.cost.weight = 4.0;
  p.options.step_rule = StepRule::growth;
  const auto a = solve(p);
  p.options.step_rule = StepRule::barzilai_borwein;
  const auto b = solve(p);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK(std::fabs(a.cost - b.cost) <= 1e-6 * (1.0 + std::fabs(a.cost)));
  CHECK(primitive_deviation(a.control, b.control) <= 1e-4);
  for (std::size_t k = 1; k < b.history.size(); ++k) CHECK(b.history[k] <= b.history[k - 1]);
  CHECK(to_string(StepRule::barzilai_borwein) == "barzilai_borwein");
  CHECK(step_rule_from_string("growth") == StepRule::growth);
  CHECK_THROWS_AS(step_rule_from_string("newton"), InvalidInput);
}

TEST_CASE("convex instances: solve is at least as good as the lattice") {
  // Zero kernel and leader tracking make the reduced problem convex.
  for (int inst = 0; inst < 4; ++inst) {
    OptimalControlProblem p;
    StreamRng rng(90, static_cast<std::uint64_t>(inst));
    p.initial = Configuration::from_parts(1, std::vector<double>{rng.uniform(-1, 1)},
                                          std::vector<double>{rng.uniform(-1, 1)}, std::vector<double>{0.0},
                                          std::vector<double>{0.0});
    p.kernel = Kernel::zero(1);
    p.cost.family = CostFamily::leader_tracking;
    p.cost.weight = 2.0;
    p.cost.target_y = {rng.uniform(-1, 1)};
    p.cost.target_w = {0.0};
    p.horizon = 1.0;
    p.cells = 2;
    p.radius = 1.0;
    p.n_steps = 20;
    const auto rep = solve(p);
    const auto b3 = brute_force_solve(p, 3);
    const auto b9 = brute_force_solve(p, 9);
    const auto b33 = brute_force_solve(p, 33);
    CHECK(b9.cost <= b3.cost);
    CHECK(b33.cost <= b9.cost);
    CHECK(rep.cost <= b33.cost + 1e-6);
  }
}

TEST_CASE("brute force: enumeration and budget") {
  auto p = random_problem(95, 1, 1, 1, 1, CostFamily::velocity_consensus);
  const auto bf = brute_force_solve(p, 3);
  double best = std::numeric_limits<double>::infinity();
  for (double c : {-1.0, 0.0, 1.0}) best = std::min(best, objective(p, ControlSignal(1, 1, 1, 1.0, 1.0, {c})));
  CHECK(bf.cost == best);
  CHECK(bf.iterations == 3);

  auto big = random_problem(96, 2, 1, 2, 8, CostFamily::velocity_consensus);
  CHECK_THROWS_AS(brute_force_solve(big, 3), InvalidInput);
  CHECK_THROWS_AS(brute_force_solve(p, 11, 10), InvalidInput);

  // Lattice corners outside the ball are skipped in d = 2.
  auto q = random_problem(97, 1, 1, 2, 1, CostFamily::velocity_consensus);
  const auto bq = brute_force_solve(q, 3);
  const auto v = bq.control.values();
  CHECK(std::hypot(v[0], v[1]) <= 1.0);
}

TEST_CASE("doubling the running-cost weight never lowers the control effort") {
  for (int inst = 0; inst < 3; ++inst) {
    auto p = random_problem(300 + inst, 1, 4, 1, 4, CostFamily::leader_tracking);
    double prev = -1.0;
    for (double gamma : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      p.cost.weight = gamma;
      const auto rep = solve(p);
      CHECK(rep.l1_cost >= prev - 1e-6);
      prev = rep.l1_cost;
    }
  }
}

TEST_CASE("solve rejects inadmissible starts") {
  auto p = random_problem(98, 1, 1, 1, 2, CostFamily::velocity_consensus);
  const ControlSignal bad(1, 1, 2, 1.0, 1.0, {2.0, 0.0});
  CHECK_THROWS_AS(solve(p, bad), InvalidInput);
  const ControlSignal wrong(1, 1, 3, 1.0, 1.0);
  CHECK_THROWS_AS(solve(p, wrong), InvalidInput);
}
