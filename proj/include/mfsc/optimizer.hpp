#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfsc/control.hpp"
#include "mfsc/cost.hpp"
#include "mfsc/dynamics.hpp"
#include <string>

#include "mfsc/kernels.hpp"
#include "mfsc/measures.hpp"

namespace mfsc {

// Trial step after an accepted iterate: growth multiplies the last step;
// barzilai_borwein uses |s|^2 / <s, y> from the last two iterates and falls
// back to growth when <s, y> <= 0.
enum class StepRule { growth, barzilai_borwein };

std::string to_string(StepRule r);
StepRule step_rule_from_string(const std::string& name);

struct OptimizerOptions {
  int max_iters = 2000;
  double step0 = 1.0;        // eta_0
  double backtrack = 0.5;
  double step_growth = 2.0;  // eta after an accepted step: min(growth * eta, max_step)
  double max_step = 1e6;
  double min_step = 1e-12;   // below this a trial counts as stalled
  double tol_J = 1e-8;       // relative to 1 + |J_0|
  double tol_u = 1e-6;       // relative to U
  StepRule step_rule = StepRule::barzilai_borwein;
  Backend backend = Backend::parallel;
};

// min over admissible u of int_0^T L dt + (1/m) sum_k int_0^T |u_k| dt subject
// to the leader-follower dynamics, u piecewise constant on `cells` cells.
struct OptimalControlProblem {
  Configuration initial;
  Kernel kernel;
  RunningCost cost;
  double horizon = 1.0;
  std::size_t cells = 1;
  double radius = 1.0;
  std::size_t n_steps = 0;  // 0 selects default_step_count(cells)
  OptimizerOptions options;

  void validate() const;
  TimeGrid grid() const;
  ControlSignal zero_control() const;
};

// Discretized smooth part sum_n omega_n L(zeta_n) and its exact gradient with
// respect to the cell values, by a reverse sweep through the RK4 steps.
struct SmoothEvaluation {
  double value = 0.0;
  std::vector<double> gradient;  // cells * m * d, ControlSignal layout
};

double smooth_cost(const OptimalControlProblem& p, const ControlSignal& u);
SmoothEvaluation smooth_cost_and_gradient(const OptimalControlProblem& p, const ControlSignal& u);

// Discretized objective: smooth_cost + control_l1_cost.
double objective(const OptimalControlProblem& p, const ControlSignal& u);

// Prox of tau |.| + indicator of B(0, U): radial soft shrinkage, then radial
// projection. Values at or below the threshold map to +0.0 exactly.
std::vector<double> prox_l1_ball(std::span<const double> v, double tau, double radius);
void prox_l1_ball_inplace(std::span<double> v, double tau, double radius) noexcept;

struct SolveReport {
  ControlSignal control;
  double cost = 0.0;         // J*
  double smooth_cost = 0.0;
  double l1_cost = 0.0;
  std::vector<double> history;  // J per accepted iterate, starting with J(u0)
  double sparsity = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool stalled = false;
};

// Proximal gradient u <- prox_{eta tau}(u - eta grad) with backtracking on
// the sufficient-decrease condition of the smooth part; tau = Delta / m per
// cell, Delta the cell length.
SolveReport solve(const OptimalControlProblem& p, const ControlSignal& u0);
SolveReport solve(const OptimalControlProblem& p);

// Exhaustive search over the lattice of `levels` equispaced values in
// [-U, U] per control coordinate (odd `levels` include 0). Lattice points
// outside some leader ball are skipped. Ties go to the lowest candidate
// index, with the first coordinate most significant.
SolveReport brute_force_solve(const OptimalControlProblem& p, int levels, std::size_t budget = 1000000);

}  // namespace mfsc
