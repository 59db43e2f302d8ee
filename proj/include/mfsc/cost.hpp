#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfsc/control.hpp"
#include "mfsc/dynamics.hpp"
#include "mfsc/measures.hpp"

namespace mfsc {

enum class CostFamily { velocity_consensus, leader_tracking, measure_target };

std::string to_string(CostFamily f);
CostFamily cost_family_from_string(const std::string& name);

// Running cost L(y, w, mu), scaled by weight (gamma_L).
//  velocity_consensus: int |v - vbar|^2 dmu, vbar the mean velocity of mu
//  leader_tracking:    (1/m) sum_k (a_y |y_k - y*|^2 + a_w |w_k - w*|^2)
//  measure_target:     W1(mu, target)
struct RunningCost {
  CostFamily family = CostFamily::velocity_consensus;
  double weight = 1.0;
  std::vector<double> target_y;  // d
  std::vector<double> target_w;  // d
  double position_weight = 1.0;  // a_y
  double velocity_weight = 1.0;  // a_w
  std::optional<EmpiricalMeasure> target;

  void validate(int dim) const;

  // L at a configuration (followers taken as their uniform measure). The
  // follower-dependent families vanish when N = 0.
  double value(const Configuration& c) const;
  // Adds dL/dzeta into grad (Configuration layout). For measure_target this
  // is the subgradient sum_j pi_ij (xi_i - eta_j) / |xi_i - eta_j| of an
  // optimal plan pi.
  void add_gradient(const Configuration& c, double scale, std::span<double> grad) const;
};

// L(y, w, mu) for leaders given explicitly and an arbitrary measure mu.
double running_cost(const RunningCost& cost, std::span<const double> y, std::span<const double> w,
                    const EmpiricalMeasure& mu);

// Composite trapezoid weights for the instants `times`.
std::vector<double> trapezoid_weights(std::span<const double> times);

// int_0^T L dt by the trapezoid rule on the trajectory instants (second
// order; exact for integrands affine in t) plus the exact control_l1_cost.
// The trajectory must contain every control breakpoint.
double total_cost(const Trajectory& traj, const ControlSignal& u, const RunningCost& cost);
// Only the quadrature of L.
double running_cost_integral(const Trajectory& traj, const RunningCost& cost);

}  // namespace mfsc
