#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfsc/control.hpp"
#include "mfsc/forces.hpp"
#include "mfsc/kernels.hpp"
#include "mfsc/measures.hpp"

namespace mfsc {

// Integration instants on [0, T]: the uniform grid j T / n_steps merged with
// the control breakpoints, so no step straddles a discontinuity of u.
struct TimeGrid {
  double horizon = 0.0;
  std::size_t n_steps = 0;
  std::vector<double> breakpoints;
  std::vector<double> instants;

  std::size_t steps() const noexcept { return instants.empty() ? 0 : instants.size() - 1; }
  double step(std::size_t j) const noexcept { return instants[j + 1] - instants[j]; }
};

TimeGrid make_time_grid(double horizon, std::size_t n_steps, std::span<const double> breakpoints = {});
TimeGrid make_time_grid(const ControlSignal& u, std::size_t n_steps);

// Default step h = min(T / 200, (T / n_cells) / 4), returned as a step count
// rounded up to a multiple of n_cells so that breakpoints fall on the grid.
std::size_t default_step_count(std::size_t cells);

struct Trajectory {
  std::vector<double> times;
  std::vector<Configuration> states;
  // Control cell used on step j (from times[j] to times[j+1]).
  std::vector<std::size_t> step_cell;
  // k1, k2, k3 of every step, flattened; filled only when requested.
  std::vector<double> stages;
};

struct IntegrateOptions {
  Backend backend = Backend::parallel;
  bool check_admissible = true;
  bool keep_stages = false;
};

// Tangent (w, H*mu_N + H*mu_m + u, v, H*mu_N + H*mu_m) at c for the control
// value u_now (m*d). Autonomous for fixed u.
Configuration rhs(const Kernel& kernel, const Configuration& c, std::span<const double> u_now,
                  Backend backend = Backend::parallel);

// Same, on raw state arrays in the Configuration layout.
void rhs_into(const Kernel& kernel, std::size_t leaders, std::size_t followers, std::span<const double> state,
              std::span<const double> u_now, std::span<double> out, Backend backend);

// Reverse-mode product of the right-hand side: given a cotangent `bar` on
// the tangent, adds bar^T d(rhs)/dz into state_bar and returns through u_bar
// (m*d, added) the cotangent of u_now.
void rhs_vjp(const Kernel& kernel, std::size_t leaders, std::size_t followers, std::span<const double> state,
             std::span<const double> bar, std::span<double> state_bar, std::span<double> u_bar, Backend backend);

// Classic RK4 on every step of the grid with u held at its cell value.
// Throws IntegrationError on the first non-finite state and InvalidInput if
// the grid does not contain the control breakpoints.
Trajectory integrate(const Configuration& c0, const ControlSignal& u, const Kernel& kernel, const TimeGrid& grid,
                     const IntegrateOptions& options = {});

// A priori bounds for admissible controls. With A = config_norm,
//   dA/dt <= 4C + U + (1 + 4C) A <= Cbar (1 + A),   Cbar = 1 + 4C + U,
// from |H * mu (xi)| <= C (1 + |xi| + int |xi'| dmu) summed over the two
// populations. Gronwall then gives A(t) <= (A(0) + Cbar t) e^{Cbar t} = B and
// |d zeta/dt| <= Cbar (1 + B) = Lip.
struct Envelopes {
  double cbar = 0.0;
  double growth_bound = 0.0;
  double lipschitz_bound = 0.0;
};

double envelope_constant(double growth_constant, double control_radius) noexcept;
Envelopes envelopes_from_constant(double initial_norm, double cbar, double horizon) noexcept;
Envelopes envelopes(const Configuration& c0, const Kernel& kernel, double control_radius, double horizon);

// Test particle P = (x, v) moved by x' = v, v' = H*mu_N(P) + H*mu_m(P) for
// the frozen background c, over [0, T] with n_steps RK4 steps. Its Lipschitz
// constant in P is 1 + 2 Lip_H.
std::vector<double> frozen_flow(const Kernel& kernel, const Configuration& background,
                                std::span<const double> point, double horizon, std::size_t n_steps);

// Largest |xi| over all particles and snapshots.
double trajectory_support_radius(const Trajectory& traj);

}  // namespace mfsc
