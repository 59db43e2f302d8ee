#pragma once

#include <filesystem>
#include <string>

#include "mfsc/control.hpp"
#include "mfsc/dynamics.hpp"
#include "mfsc/limits.hpp"
#include "mfsc/measures.hpp"
#include "mfsc/optimizer.hpp"

namespace mfsc {

// Shortest decimal string that reads back to the same double.
std::string format_double(double x);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// CSV columns (frozen):
//   measure:     x1..xd, v1..vd, weight
//   control:     cell, t_start, t_end, leader, u1..ud
//   trajectory:  step, t, particle, role, x1..xd, v1..vd   (role: leader|follower)
//   history:     iteration, J
//   convergence: N, distance, cost, cost_gap, optimal_cost, optimal_gap,
//                primitive_deviation, sparsity, iterations, converged, stalled, failed
//   stability:   pair, seed, initial_distance, sup_distance, ratio,
//                kernel_lipschitz, rhs_lipschitz, bound, within
//   sweep:       N, gamma, optimal_cost, l1_cost, sparsity, primitive_sup,
//                iterations, converged, stalled
std::string measure_csv(const EmpiricalMeasure& mu);
EmpiricalMeasure parse_measure_csv(const std::string& text);
EmpiricalMeasure read_measure_csv(const std::filesystem::path& path);
std::string control_csv(const ControlSignal& u);
// Snapshots every `cadence` steps plus the final one.
std::string trajectory_csv(const Trajectory& traj, std::size_t cadence = 1);
std::string history_csv(const SolveReport& r);
std::string convergence_csv(const ConvergenceReport& r);
std::string stability_csv(const StabilityReport& r);
std::string sweep_csv(const SweepReport& r);

// JSON documents (two-space indent, fixed key order). Wall-clock times are
// not part of any of these, so equal inputs give equal bytes.
std::string measure_json(const EmpiricalMeasure& mu);
std::string control_json(const ControlSignal& u);
std::string trajectory_json(const Trajectory& traj, std::size_t cadence = 1);
std::string solve_report_json(const SolveReport& r);
std::string convergence_json(const ConvergenceReport& r);
std::string stability_json(const StabilityReport& r);
std::string sweep_json(const SweepReport& r);

}  // namespace mfsc
