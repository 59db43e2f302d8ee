#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "mfsc/control.hpp"
#include "mfsc/dynamics.hpp"
#include "mfsc/error.hpp"
#include "mfsc/kernels.hpp"
#include "mfsc/measures.hpp"
#include "mfsc/random.hpp"

using namespace mfsc;

namespace {

Kernel unit_alignment(int d) { return Kernel::cucker_smale(d, {1.0, 1.0, 0.0, -1.0}); }

Configuration random_config(std::uint64_t seed, std::size_t m, std::size_t n, int d, double spread = 1.0) {
  StreamRng rng(seed, 0);
  Configuration c(m, n, d);
  for (auto& x : c.state()) x = rng.uniform(-spread, spread);
  return c;
}

ControlSignal random_control(std::uint64_t seed, std::size_t m, int d, std::size_t cells, double T, double U) {
  StreamRng rng(seed, 1);
  std::vector<double> vals(cells * m * d);
  for (auto& x : vals) x = rng.uniform(-U, U);
  ControlSignal u(m, d, cells, T, U, vals);
  return project_admissible(u);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double r = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) r = std::max(r, std::fabs(a[k] - b[k]));
  return r;
}

}  // namespace

TEST_CASE("rhs examples") {
  SUBCASE("zero kernel, zero control") {
    const auto c = random_config(1, 2, 3, 2);
    const std::vector<double> u(4, 0.0);
    const auto t = rhs(Kernel::zero(2), c, u);
    const auto vel = c.velocities();
    for (std::size_t k = 0; k < vel.size(); ++k) {
      CHECK(t.positions()[k] == vel[k]);
      CHECK(t.velocities()[k] == 0.0);
    }
  }
  SUBCASE("single leader, control only") {
    const auto c = Configuration::from_parts(1, std::vector<double>{2}, std::vector<double>{-3}, {}, {});
    const std::vector<double> u{0.7};
    const auto t = rhs(Kernel::zero(1), c, u);
    CHECK(t.positions()[0] == -3.0);
    CHECK(t.velocities()[0] == 0.7);
  }
  SUBCASE("leader and follower with opposite velocities") {
    // Each measure has mass 1: leader sees -(w - v) from the follower and 0 from itself.
    const auto c = Configuration::from_parts(1, std::vector<double>{0}, std::vector<double>{1}, std::vector<double>{0},
                                             std::vector<double>{-1});
    const std::vector<double> u{0.0};
    const auto t = rhs(unit_alignment(1), c, u);
    CHECK(t.leaders_w()[0] == -2.0);
    CHECK(t.followers_v()[0] == 2.0);
  }
  SUBCASE("dimension mismatch") {
    const auto c = random_config(1, 1, 1, 2);
    const std::vector<double> u(2, 0.0);
    CHECK_THROWS_AS(rhs(Kernel::zero(1), c, u), InvalidInput);
    const std::vector<double> bad(3, 0.0);
    CHECK_THROWS_AS(rhs(Kernel::zero(2), c, bad), InvalidInput);
  }
}

TEST_CASE("time grid") {
  const auto g = make_time_grid(1.0, 10);
  CHECK(g.steps() == 10);
  CHECK(g.instants.back() == 1.0);
  const std::vector<double> b{0.0, 1.0 / 3.0, 2.0 / 3.0};
  const auto gb = make_time_grid(1.0, 10, b);
  CHECK(gb.steps() == 12);
  CHECK(std::find(gb.instants.begin(), gb.instants.end(), 1.0 / 3.0) != gb.instants.end());
  CHECK(std::is_sorted(gb.instants.begin(), gb.instants.end()));
  CHECK(default_step_count(1) == 200);
  CHECK(default_step_count(3) == 201);
  CHECK(default_step_count(64) == 256);
  CHECK_THROWS_AS(make_time_grid(-1.0, 10), InvalidInput);

  // A grid that ignores the breakpoints is refused.
  const ControlSignal u(1, 1, 3, 1.0, 1.0);
  const auto c = random_config(2, 1, 0, 1);
  CHECK_THROWS_AS(integrate(c, u, Kernel::zero(1), make_time_grid(1.0, 10)), InvalidInput);
  CHECK_NOTHROW(integrate(c, u, Kernel::zero(1), make_time_grid(u, 10)));
}

TEST_CASE("free streaming is exact") {
  const auto c0 = random_config(3, 2, 5, 2);
  const ControlSignal u(2, 2, 4, 2.0, 1.0);
  const auto traj = integrate(c0, u, Kernel::zero(2), make_time_grid(u, 40));
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    const double t = traj.times[j];
    const auto& s = traj.states[j];
    for (std::size_t k = 0; k < s.positions().size(); ++k) {
      CHECK(std::fabs(s.positions()[k] - (c0.positions()[k] + c0.velocities()[k] * t)) <= 1e-12);
      CHECK(s.velocities()[k] == c0.velocities()[k]);
    }
  }
}

TEST_CASE("constant control on a lone leader is polynomial") {
  const double y0 = 0.3, w0 = -1.2, cval = 0.8, T = 1.5;
  const auto c0 = Configuration::from_parts(1, std::vector<double>{y0}, std::vector<double>{w0}, {}, {});
  const ControlSignal u(1, 1, 3, T, 1.0, {cval, cval, cval});
  const auto traj = integrate(c0, u, Kernel::zero(1), make_time_grid(u, 30));
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    const double t = traj.times[j];
    CHECK(std::fabs(traj.states[j].leaders_w()[0] - (w0 + cval * t)) <= 1e-12);
    CHECK(std::fabs(traj.states[j].leaders_y()[0] - (y0 + w0 * t + 0.5 * cval * t * t)) <= 1e-12);
  }
}

TEST_CASE("two-body alignment decays like exp(-t)") {
  const double w1 = 0.8, w2 = -0.4;
  const auto c0 =
      Configuration::from_parts(1, std::vector<double>{0.0, 1.0}, std::vector<double>{w1, w2}, {}, {});
  const ControlSignal u(2, 1, 1, 1.0, 1.0);
  const auto traj = integrate(c0, u, unit_alignment(1), make_time_grid(u, 1000));
  const auto& end = traj.states.back();
  const double rel = end.leaders_w()[0] - end.leaders_w()[1];
  CHECK(std::fabs(rel - (w1 - w2) * std::exp(-1.0)) <= 1e-9);
  // Momentum is conserved.
  CHECK(end.leaders_w()[0] + end.leaders_w()[1] == doctest::Approx(w1 + w2).epsilon(1e-14));
}

TEST_CASE("envelope values") {
  const auto e = envelopes_from_constant(1.0, 1.0, 1.0);
  CHECK(e.growth_bound == doctest::Approx(2.0 * std::numbers::e).epsilon(1e-15));
  CHECK(e.lipschitz_bound == doctest::Approx(1.0 + 2.0 * std::numbers::e).epsilon(1e-15));
  CHECK(envelopes_from_constant(0.0, 3.0, 1e-9).growth_bound < 1e-8);
  CHECK(envelopes_from_constant(0.0, 3.0, 0.0).growth_bound == 0.0);
  CHECK(envelope_constant(2.0, 0.5) == 9.5);
}

TEST_CASE("growth envelope and time-Lipschitz bound hold along trajectories") {
  for (int inst = 0; inst < 40; ++inst) {
    const std::size_t m = 1 + inst % 3, n = static_cast<std::size_t>(inst % 5) * 8;
    const int d = 1 + inst % 2;
    const double T = 1.0, U = 0.5 + (inst % 4);
    const Kernel k = inst % 2 ? Kernel::cucker_smale(d, {}) : Kernel::repulsion_attraction(d, {0.01, 1.0, 0.2});
    const auto c0 = random_config(100 + inst, m, n, d, 2.0);
    const auto u = random_control(100 + inst, m, d, 4, T, U);
    const auto traj = integrate(c0, u, k, make_time_grid(u, 80));
    const auto env = envelopes(c0, k, U, T);
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
      CHECK(config_norm(traj.states[j]) <= env.growth_bound);
      if (j > 0) {
        const double dt = traj.times[j] - traj.times[j - 1];
        CHECK(config_distance(traj.states[j], traj.states[j - 1]) <= env.lipschitz_bound * dt * (1.0 + 1e-9));
      }
    }
  }
}

TEST_CASE("step halving shows fourth order") {
  const Kernel k = Kernel::cucker_smale(2, {1.0, 1.0, 0.5, -1.0});
  const auto c0 = random_config(7, 2, 6, 2, 1.0);
  const auto u = random_control(7, 2, 2, 2, 2.0, 1.0);
  auto final_state = [&](std::size_t steps) { return integrate(c0, u, k, make_time_grid(u, steps)).states.back(); };
  const auto a = final_state(8), b = final_state(16), c = final_state(32);
  const double e1 = config_distance(a, b), e2 = config_distance(b, c);
  CHECK(e2 > 0.0);
  CHECK(e1 / e2 >= 8.0);
}

TEST_CASE("integration failure reports the step") {
  const Kernel k = Kernel::cucker_smale(1, {1e6, 1.0, 0.0, 1.0});
  const auto c0 = Configuration::from_parts(1, std::vector<double>{0.0}, std::vector<double>{1.0},
                                            std::vector<double>{0.0}, std::vector<double>{-1.0});
  const ControlSignal u(1, 1, 1, 400.0, 1.0);
  try {
    integrate(c0, u, k, make_time_grid(u, 40));
    FAIL("expected an integration failure");
  } catch (const IntegrationError& e) {
    CHECK(e.step() > 0);
    CHECK(e.step() < 40);
  }
}

TEST_CASE("relabeling followers permutes the trajectory") {
  const Kernel k = Kernel::cucker_smale(2, {});
  const auto c0 = random_config(9, 2, 12, 2);
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[0], perm[5]);
  Configuration c1 = c0;
  for (std::size_t i = 0; i < 12; ++i) {
    for (int q = 0; q < 2; ++q) {
      c1.followers_x()[i * 2 + q] = c0.followers_x()[perm[i] * 2 + q];
      c1.followers_v()[i * 2 + q] = c0.followers_v()[perm[i] * 2 + q];
    }
  }
  const auto u = random_control(9, 2, 2, 3, 1.0, 1.0);
  const auto t0 = integrate(c0, u, k, make_time_grid(u, 30));
  const auto t1 = integrate(c1, u, k, make_time_grid(u, 30));
  const auto& a = t0.states.back();
  const auto& b = t1.states.back();
  for (std::size_t q = 0; q < 4; ++q) {
    CHECK(a.leaders_y()[q] == b.leaders_y()[q]);
    CHECK(a.leaders_w()[q] == b.leaders_w()[q]);
  }
  for (std::size_t i = 0; i < 12; ++i) {
    for (int q = 0; q < 2; ++q) {
      CHECK(b.followers_x()[i * 2 + q] == a.followers_x()[perm[i] * 2 + q]);
      CHECK(b.followers_v()[i * 2 + q] == a.followers_v()[perm[i] * 2 + q]);
    }
  }
}

TEST_CASE("serial and parallel integration agree bitwise") {
  const Kernel k = Kernel::cucker_smale(2, {});
  const auto c0 = random_config(11, 2, 40, 2);
  const auto u = random_control(11, 2, 2, 4, 1.0, 1.0);
  set_thread_count(2);
  const auto a = integrate(c0, u, k, make_time_grid(u, 40), {Backend::serial, true});
  const auto b = integrate(c0, u, k, make_time_grid(u, 40), {Backend::parallel, true});
  set_thread_count(1);
  const auto sa = a.states.back().state(), sb = b.states.back().state();
  CHECK(std::equal(sa.begin(), sa.end(), sb.begin()));
}

TEST_CASE("frozen flow separation stays within exp(L t)") {
  const Kernel k = Kernel::cucker_smale(1, {1.0, 1.0, 0.5, -1.0});
  const auto bg = random_config(13, 2, 20, 1);
  const double T = 1.0;
  for (int inst = 0; inst < 10; ++inst) {
    StreamRng rng(14, static_cast<std::uint64_t>(inst));
    const std::vector<double> p1{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double delta = 1e-3;
    const std::vector<double> p2{p1[0] + delta * rng.uniform(-1, 1), p1[1] + delta * rng.uniform(-1, 1)};
    const auto q1 = frozen_flow(k, bg, p1, T, 100);
    const auto q2 = frozen_flow(k, bg, p2, T, 100);
    // Both images stay in a ball of radius 1 + sqrt 2 + T |v| bound; sample a generous cube.
    const double lip = kernel_lipschitz_estimate(k, 8.0, 4000, 15);
    const double L = 1.0 + 2.0 * lip;
    const double d0 = std::hypot(p1[0] - p2[0], p1[1] - p2[1]);
    const double dT = std::hypot(q1[0] - q2[0], q1[1] - q2[1]);
    CHECK(dT <= std::exp(L * T) * d0 * 1.1);
  }
}

TEST_CASE("Gronwall continuous dependence") {
  const Kernel k = Kernel::cucker_smale(2, {1.0, 1.0, 0.5, -1.0});
  const double T = 1.0, delta = 1e-4;
  for (int inst = 0; inst < 10; ++inst) {
    const auto c0 = random_config(200 + inst, 2, 16, 2);
    Configuration c1 = c0;
    StreamRng rng(201, static_cast<std::uint64_t>(inst));
    for (auto& x : c1.state()) x += delta * rng.uniform(-1, 1);
    const double d0 = config_distance(c0, c1);
    const auto u = random_control(200 + inst, 2, 2, 4, T, 1.0);
    const auto a = integrate(c0, u, k, make_time_grid(u, 40));
    const auto b = integrate(c1, u, k, make_time_grid(u, 40));
    const double R = std::max(trajectory_support_radius(a), trajectory_support_radius(b));
    const double Lhat = 1.0 + 4.0 * kernel_lipschitz_estimate(k, 2.0 * R, 4000, 3);
    for (std::size_t j = 0; j < a.states.size(); ++j) {
      CHECK(config_distance(a.states[j], b.states[j]) <= std::exp(Lhat * a.times[j]) * d0 * 1.1);
    }
  }
}
