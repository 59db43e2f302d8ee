#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mfsc/control.hpp"
#include "mfsc/cost.hpp"
#include "mfsc/dynamics.hpp"
#include "mfsc/kernels.hpp"
#include "mfsc/measures.hpp"
#include "mfsc/optimizer.hpp"

namespace mfsc {

// Declarative description shared by all limit experiments. The reference
// count n_ref plays the role of the mean-field solution.
struct LimitExperimentSpec {
  InitialDensitySpec followers;
  std::vector<double> leader_y;  // m*d
  std::vector<double> leader_w;  // m*d
  Kernel kernel;
  RunningCost cost;
  double horizon = 1.0;
  std::size_t n_steps = 0;  // 0 selects default_step_count(cells)
  std::size_t cells = 1;
  double radius = 1.0;
  std::vector<double> control_values;  // fixed u, cells*m*d; empty means u = 0
  std::vector<std::size_t> n_list;
  std::size_t n_ref = 0;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;  // compare snapshots at every k-th instant (and T)
  OptimizerOptions optimizer;
  std::vector<double> gamma_list;
  double delta0 = 1e-3;
  std::size_t pairs = 20;
  std::size_t stability_n = 0;  // 0 means n_list.front()
  int lipschitz_samples = 4000;
  double monotone_slack = 0.05;
  Backend backend = Backend::parallel;

  int dim() const noexcept { return followers.dim; }
  std::size_t leaders() const noexcept { return leader_y.size() / static_cast<std::size_t>(followers.dim); }
  void validate() const;
  ControlSignal control() const;
  TimeGrid grid() const;
  std::vector<std::size_t> eval_indices() const;
  Configuration initial(std::size_t n, std::uint64_t seed) const;
  OptimalControlProblem problem(std::size_t n, double gamma) const;
};

struct ConvergenceRow {
  std::size_t n = 0;
  double distance = 0.0;             // sup_t x_metric to the reference run
  double cost = 0.0;                 // F_N(u) for the fixed control
  double cost_gap = 0.0;             // |F_N(u) - F_ref(u)|
  double optimal_cost = 0.0;         // J*_N
  double optimal_gap = 0.0;          // |J*_N - J*_ref|
  double primitive_deviation = 0.0;  // sup_t |int_0^t (u*_N - u*_ref)|
  double sparsity = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
  bool stalled = false;
  bool failed = false;
  std::string failure;
  double wall_seconds = 0.0;
  ControlSignal control;  // u*_N when optimizing
};

struct ConvergenceReport {
  std::string experiment;
  std::vector<ConvergenceRow> rows;  // ordered by n; the last row is n_ref
  std::vector<std::pair<std::string, bool>> verdicts;

  bool verdict(const std::string& name) const;
};

struct StabilityRow {
  std::size_t pair = 0;
  std::uint64_t seed = 0;
  double initial_distance = 0.0;
  double sup_distance = 0.0;
  double ratio = 0.0;
  double kernel_lipschitz = 0.0;  // Lip_H on the cube of half-width 2 R_T
  double rhs_lipschitz = 0.0;     // 1 + 4 Lip_H
  double bound = 0.0;             // e^{rhs_lipschitz T} (1 + slack)
  bool within = true;
  double wall_seconds = 0.0;
};

struct StabilityReport {
  std::size_t n = 0;
  double delta0 = 0.0;
  double slack = 0.1;
  std::vector<StabilityRow> rows;
  std::vector<std::pair<std::string, bool>> verdicts;

  bool verdict(const std::string& name) const;
};

struct SweepRow {
  std::size_t n = 0;
  double gamma = 0.0;
  double optimal_cost = 0.0;
  double l1_cost = 0.0;
  double sparsity = 0.0;
  double primitive_sup = 0.0;  // sup_t max_k |int_0^t u*_k|
  std::size_t iterations = 0;
  bool converged = true;
  bool stalled = false;
  double wall_seconds = 0.0;
  ControlSignal control;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // n-major, gamma in list order
  std::vector<std::pair<std::string, bool>> verdicts;

  bool verdict(const std::string& name) const;
};

// v strictly decreasing, except that v[1] <= (1 + slack) v[0] is accepted on
// the first transition.
bool decreasing_with_slack(const std::vector<double>& v, double slack);

// D_N = sup over evaluation instants of x_metric(run_N(t), run_ref(t)) under
// the fixed control u. Verdict "distance_decreasing".
ConvergenceReport meanfield_convergence_experiment(const LimitExperimentSpec& spec, const ControlSignal& u);

// Amplification sup_t x_metric(run_1, run_2) / x_metric at t = 0 for
// `pairs` seeded pairs. In the second run every position (leaders and
// followers) moves by delta0 e_p, e_p an independent random unit vector, so
// the initial distance is at most 2 delta0. With the zero kernel each offset
// is transported unchanged and the ratio is 1 up to rounding. Verdict
// "within_gronwall".
StabilityReport stability_experiment(const LimitExperimentSpec& spec, const ControlSignal& u, double delta0,
                                     double slack = 0.1);

// (a) F_N(u) for the fixed control vs F_ref(u), verdict "recovery_gap_decreasing";
// (b) J*_N vs J*_ref, verdict "optimal_gap_improves" (last N closer than first);
// (c) primitive deviation of u*_N from u*_ref, reported only. Each solve
// warm-starts from the previous optimum (the first from u = 0).
ConvergenceReport gamma_convergence_experiment(const LimitExperimentSpec& spec);

// Solves for every (N, gamma). Verdicts: "sparsity_monotone" (non-increasing
// in gamma for every N), "zero_gamma_all_zero", "intermediate_exact_zeros"
// (some gamma > 0 with 0 < sparsity < 1).
SweepReport optimal_control_sweep(const LimitExperimentSpec& spec, const std::vector<double>& gamma_list);

}  // namespace mfsc
