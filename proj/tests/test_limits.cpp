#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfsc/control.hpp"
#include "mfsc/error.hpp"
#include "mfsc/limits.hpp"
#include "mfsc/measures.hpp"
#include "mfsc/wasserstein.hpp"

using namespace mfsc;

namespace {

LimitExperimentSpec small_spec(const Kernel& kernel) {
  LimitExperimentSpec s;
  s.followers.family = DensityFamily::two_cluster;
  s.followers.dim = 1;
  s.followers.mean = {-1.0, 0.5};
  s.followers.mean_b = {1.0, -0.5};
  s.followers.scale = 0.3;
  s.followers.radius = 0.6;
  s.leader_y = {-1.0, 1.0};
  s.leader_w = {0.0, 0.0};
  s.kernel = kernel;
  s.cost.family = CostFamily::velocity_consensus;
  s.cost.weight = 20.0;
  s.horizon = 1.0;
  s.cells = 2;
  s.n_steps = 20;
  s.radius = 1.0;
  s.control_values = {0.5, 0.0, 0.0, -0.5};
  s.n_list = {16, 64, 256};
  s.n_ref = 1024;
  s.seed = 3;
  s.eval_every = 5;
  s.pairs = 5;
  s.stability_n = 16;
  s.lipschitz_samples = 1000;
  return s;
}

Kernel alignment() { return Kernel::cucker_smale(1, {1.0, 0.5, 1.0, -1.0}); }

}  // namespace

TEST_CASE("decreasing_with_slack") {
  CHECK(decreasing_with_slack({3, 2, 1}, 0.05));
  CHECK(decreasing_with_slack({1.0, 1.04, 0.5}, 0.05));
  CHECK_FALSE(decreasing_with_slack({1.0, 1.06, 0.5}, 0.05));
  CHECK_FALSE(decreasing_with_slack({3, 2, 2}, 0.05));
  CHECK_FALSE(decreasing_with_slack({3, 2, 2.5}, 0.05));
  CHECK(decreasing_with_slack({}, 0.0));
  CHECK(decreasing_with_slack({1.0}, 0.0));
}

TEST_CASE("spec validation") {
  auto s = small_spec(alignment());
  CHECK_NOTHROW(s.validate());
  s.n_list = {64, 16};
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s = small_spec(alignment());
  s.control_values = {1.0};
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s = small_spec(alignment());
  const auto idx = s.eval_indices();
  CHECK(idx == std::vector<std::size_t>{0, 5, 10, 15, 20});
}

TEST_CASE("meanfield: free streaming reduces to W1 of advected samples") {
  auto s = small_spec(Kernel::zero(1));
  s.control_values.clear();
  s.n_list = {8, 32};
  s.n_ref = 128;
  const auto u = s.control();
  const auto rep = meanfield_convergence_experiment(s, u);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows.back().n == 128);
  CHECK(rep.rows.back().distance == 0.0);
  const auto ref = sample_initial_measure(s.followers, 128, s.seed);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto mu = sample_initial_measure(s.followers, s.n_list[i], s.seed);
    double sup = 0.0;
    for (std::size_t j : s.eval_indices()) {
      const double t = s.horizon * static_cast<double>(j) / static_cast<double>(s.n_steps);
      auto stream = [t](std::span<const double> in, std::span<double> out) {
        out[0] = in[0] + t * in[1];
        out[1] = in[1];
      };
      sup = std::max(sup, w1_distance(push_forward(stream, mu), push_forward(stream, ref)));
    }
    CHECK(rep.rows[i].distance == doctest::Approx(sup).epsilon(1e-10));
  }
  CHECK(rep.rows[0].distance > rep.rows[1].distance);
  CHECK(rep.verdict("distance_decreasing"));
}

TEST_CASE("meanfield: N equal to N_ref gives zero distance") {
  auto s = small_spec(alignment());
  s.n_list = {64};
  s.n_ref = 64;
  const auto rep = meanfield_convergence_experiment(s, s.control());
  CHECK(rep.rows.front().distance == 0.0);
  CHECK(rep.rows.front().cost_gap == 0.0);
}

TEST_CASE("meanfield: alignment kernel distances decrease") {
  const auto s = small_spec(alignment());
  const auto rep = meanfield_convergence_experiment(s, s.control());
  CHECK(rep.verdict("distance_decreasing"));
  for (const auto& r : rep.rows) CHECK(r.distance >= 0.0);
}

TEST_CASE("stability") {
  SUBCASE("zero kernel keeps every offset") {
    auto s = small_spec(Kernel::zero(1));
    const auto rep = stability_experiment(s, s.control(), 1e-3);
    REQUIRE(rep.rows.size() == 5);
    for (const auto& r : rep.rows) {
      CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(r.initial_distance <= 2e-3 * (1 + 1e-12));
    }
    CHECK(rep.verdict("within_gronwall"));
  }
  SUBCASE("alignment kernel stays within the Gronwall envelope") {
    auto s = small_spec(alignment());
    const auto rep = stability_experiment(s, s.control(), 1e-3);
    for (const auto& r : rep.rows) {
      CHECK(r.ratio <= std::exp(r.rhs_lipschitz * s.horizon) * 1.1);
      CHECK(r.rhs_lipschitz == 1.0 + 4.0 * r.kernel_lipschitz);
    }
    CHECK(rep.verdict("within_gronwall"));
  }
  SUBCASE("nonpositive perturbation is rejected") {
    auto s = small_spec(alignment());
    CHECK_THROWS_AS(stability_experiment(s, s.control(), 0.0), InvalidInput);
  }
}

TEST_CASE("gamma experiment with zero weight") {
  auto s = small_spec(alignment());
  s.cost.weight = 0.0;
  s.n_list = {8, 16};
  s.n_ref = 64;
  const auto rep = gamma_convergence_experiment(s);
  REQUIRE(rep.rows.size() == 3);
  for (const auto& r : rep.rows) {
    CHECK(r.optimal_cost == 0.0);
    CHECK(r.optimal_gap == 0.0);
    CHECK(r.primitive_deviation == 0.0);
    CHECK(r.sparsity == 1.0);
    for (double v : r.control.values()) CHECK(v == 0.0);
  }
  CHECK(rep.verdict("optimal_gap_improves"));
}

TEST_CASE("gamma experiment: recovery gap under free streaming") {
  auto s = small_spec(Kernel::zero(1));
  s.n_list = {16, 128};
  s.n_ref = 1024;
  s.optimizer.max_iters = 5;
  const auto rep = gamma_convergence_experiment(s);
  CHECK(rep.rows[0].cost_gap > rep.rows[1].cost_gap);
  CHECK(rep.verdict("recovery_gap_decreasing"));
}

TEST_CASE("sweep") {
  SUBCASE("zero weight only") {
    auto s = small_spec(alignment());
    s.n_list = {8, 16};
    const auto rep = optimal_control_sweep(s, {0.0});
    REQUIRE(rep.rows.size() == 2);
    for (const auto& r : rep.rows) {
      CHECK(r.sparsity == 1.0);
      CHECK(r.optimal_cost == 0.0);
    }
    CHECK(rep.verdict("zero_gamma_all_zero"));
    CHECK(rep.verdict("sparsity_monotone"));
  }
  SUBCASE("sparsity falls with the weight") {
    auto s = small_spec(alignment());
    s.n_list = {16};
    const auto rep = optimal_control_sweep(s, {0.0, 5.0, 20.0, 50.0});
    REQUIRE(rep.rows.size() == 4);
    CHECK(rep.rows[0].sparsity == 1.0);
    CHECK(rep.verdict("sparsity_monotone"));
    for (const auto& r : rep.rows) CHECK(r.control.admissible(1e-12));
  }
}
