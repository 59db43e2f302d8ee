#include "mfsc/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "mfsc/error.hpp"
#include "mfsc/numeric.hpp"

namespace mfsc {

namespace {

ParticleView view_of(std::size_t leaders, std::size_t followers, int dim, const double* state) {
  ParticleView v;
  v.leaders = leaders;
  v.followers = followers;
  v.dim = dim;
  v.pos = state;
  v.vel = state + (leaders + followers) * dim;
  return v;
}

// Breakpoints closer than this (relative to the nominal step) snap onto the
// uniform instant instead of creating a sliver step.
constexpr double kSnap = 1e-9;

void rk4_step(const Kernel& kernel, std::size_t m, std::size_t n, std::span<const double> z,
              std::span<const double> u, double h, std::span<double> out, std::vector<double> (&k)[4],
              std::vector<double>& tmp, Backend backend) {
  const std::size_t len = z.size();
  rhs_into(kernel, m, n, z, u, k[0], backend);
  for (std::size_t j = 0; j < len; ++j) tmp[j] = z[j] + 0.5 * h * k[0][j];
  rhs_into(kernel, m, n, tmp, u, k[1], backend);
  for (std::size_t j = 0; j < len; ++j) tmp[j] = z[j] + 0.5 * h * k[1][j];
  rhs_into(kernel, m, n, tmp, u, k[2], backend);
  for (std::size_t j = 0; j < len; ++j) tmp[j] = z[j] + h * k[2][j];
  rhs_into(kernel, m, n, tmp, u, k[3], backend);
  for (std::size_t j = 0; j < len; ++j) {
    out[j] = z[j] + h / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
  }
}

}  // namespace

TimeGrid make_time_grid(double horizon, std::size_t n_steps, std::span<const double> breakpoints) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidInput("time grid: T must be positive");
  if (n_steps < 1) throw InvalidInput("time grid: n_steps must be positive");
  TimeGrid g;
  g.horizon = horizon;
  g.n_steps = n_steps;
  g.instants.resize(n_steps + 1);
  for (std::size_t j = 0; j <= n_steps; ++j) {
    g.instants[j] = horizon * static_cast<double>(j) / static_cast<double>(n_steps);
  }
  const double snap = kSnap * horizon / static_cast<double>(n_steps);
  for (double b : breakpoints) {
    if (!(b >= 0.0) || b > horizon * (1.0 + 1e-12)) throw InvalidInput("time grid: breakpoint outside [0, T]");
    g.breakpoints.push_back(b);
    auto it = std::lower_bound(g.instants.begin(), g.instants.end(), b);
    if (it != g.instants.end() && std::fabs(*it - b) <= snap) {
      *it = b;
    } else if (it != g.instants.begin() && std::fabs(*(it - 1) - b) <= snap) {
      *(it - 1) = b;
    } else {
      g.instants.insert(it, b);
    }
  }
  g.instants.front() = 0.0;
  g.instants.back() = horizon;
  std::sort(g.breakpoints.begin(), g.breakpoints.end());
  return g;
}

TimeGrid make_time_grid(const ControlSignal& u, std::size_t n_steps) {
  const auto b = u.breakpoints();
  return make_time_grid(u.horizon(), n_steps, b);
}

std::size_t default_step_count(std::size_t cells) {
  if (cells < 1) throw InvalidInput("default_step_count: cells must be positive");
  const std::size_t n = std::max<std::size_t>(200, 4 * cells);
  return (n + cells - 1) / cells * cells;
}

void rhs_into(const Kernel& kernel, std::size_t leaders, std::size_t followers, std::span<const double> state,
              std::span<const double> u_now, std::span<double> out, Backend backend) {
  const int d = kernel.dim();
  const std::size_t half = (leaders + followers) * d;
  if (state.size() != 2 * half || out.size() != 2 * half) throw InvalidInput("rhs: state size mismatch");
  if (u_now.size() != leaders * d) throw InvalidInput("rhs: control must hold m*d values");
  const ParticleView view = view_of(leaders, followers, d, state.data());
  std::copy(state.begin() + half, state.end(), out.begin());
  interaction_forces(kernel, view, out.subspan(half), backend);
  for (std::size_t j = 0; j < leaders * d; ++j) out[half + j] += u_now[j];
}

Configuration rhs(const Kernel& kernel, const Configuration& c, std::span<const double> u_now, Backend backend) {
  if (c.dim() != kernel.dim()) throw InvalidInput("rhs: kernel and configuration dimensions differ");
  Configuration out(c.leaders(), c.followers(), c.dim());
  rhs_into(kernel, c.leaders(), c.followers(), c.state(), u_now, out.state(), backend);
  return out;
}

void rhs_vjp(const Kernel& kernel, std::size_t leaders, std::size_t followers, std::span<const double> state,
             std::span<const double> bar, std::span<double> state_bar, std::span<double> u_bar, Backend backend) {
  const int d = kernel.dim();
  const std::size_t half = (leaders + followers) * d;
  const ParticleView view = view_of(leaders, followers, d, state.data());
  // position' = velocity
  for (std::size_t j = 0; j < half; ++j) state_bar[half + j] += bar[j];
  interaction_forces_vjp(kernel, view, bar.subspan(half), state_bar.first(half), state_bar.subspan(half), backend);
  for (std::size_t j = 0; j < leaders * d; ++j) u_bar[j] += bar[half + j];
}

Trajectory integrate(const Configuration& c0, const ControlSignal& u, const Kernel& kernel, const TimeGrid& grid,
                     const IntegrateOptions& options) {
  if (c0.dim() != kernel.dim() || u.dim() != kernel.dim()) throw InvalidInput("integrate: dimension mismatch");
  if (u.leaders() != c0.leaders()) throw InvalidInput("integrate: control has the wrong number of leaders");
  if (!c0.finite()) throw InvalidInput("integrate: initial state must be finite");
  if (options.check_admissible && !u.admissible(1e-12)) throw InvalidInput("integrate: control is not admissible");
  if (grid.steps() < 1) throw InvalidInput("integrate: empty time grid");
  const double snap = kSnap * grid.horizon / static_cast<double>(grid.n_steps);
  if (std::fabs(grid.horizon - u.horizon()) > snap) throw InvalidInput("integrate: grid and control horizons differ");
  for (std::size_t c = 1; c < u.cells(); ++c) {
    const double b = u.breakpoint(c);
    auto it = std::lower_bound(grid.instants.begin(), grid.instants.end(), b - snap);
    if (it == grid.instants.end() || std::fabs(*it - b) > snap) {
      throw InvalidInput("integrate: time grid does not contain control breakpoint " + std::to_string(b));
    }
  }

  const std::size_t m = c0.leaders(), n = c0.followers();
  const std::size_t len = c0.state().size();
  Trajectory traj;
  traj.times = grid.instants;
  traj.states.reserve(grid.instants.size());
  traj.step_cell.reserve(grid.steps());
  traj.states.push_back(c0);
  std::vector<double> k[4] = {std::vector<double>(len), std::vector<double>(len), std::vector<double>(len),
                              std::vector<double>(len)};
  std::vector<double> tmp(len);
  for (std::size_t j = 0; j < grid.steps(); ++j) {
    const double h = grid.step(j);
    const std::size_t cell = u.cell_at(0.5 * (grid.instants[j] + grid.instants[j + 1]));
    traj.step_cell.push_back(cell);
    Configuration next(m, n, c0.dim());
    rk4_step(kernel, m, n, traj.states.back().state(), u.cell(cell), h, next.state(), k, tmp, options.backend);
    if (!next.finite()) throw IntegrationError("integrate: non-finite state", j);
    if (options.keep_stages) {
      for (int s = 0; s < 3; ++s) traj.stages.insert(traj.stages.end(), k[s].begin(), k[s].end());
    }
    traj.states.push_back(std::move(next));
  }
  return traj;
}

double envelope_constant(double growth_constant, double control_radius) noexcept {
  return 1.0 + 4.0 * growth_constant + control_radius;
}

Envelopes envelopes_from_constant(double initial_norm, double cbar, double horizon) noexcept {
  Envelopes e;
  e.cbar = cbar;
  e.growth_bound = (initial_norm + cbar * horizon) * std::exp(cbar * horizon);
  e.lipschitz_bound = cbar * (1.0 + e.growth_bound);
  return e;
}

Envelopes envelopes(const Configuration& c0, const Kernel& kernel, double control_radius, double horizon) {
  if (!(control_radius >= 0.0) || !(horizon >= 0.0)) throw InvalidInput("envelopes: U and T must be nonnegative");
  return envelopes_from_constant(config_norm(c0), envelope_constant(kernel.growth_constant(), control_radius),
                                 horizon);
}

std::vector<double> frozen_flow(const Kernel& kernel, const Configuration& background, std::span<const double> point,
                                double horizon, std::size_t n_steps) {
  const int d = kernel.dim();
  if (background.dim() != d || point.size() != static_cast<std::size_t>(2 * d)) {
    throw InvalidInput("frozen_flow: dimension mismatch");
  }
  if (n_steps < 1 || !(horizon >= 0.0)) throw InvalidInput("frozen_flow: invalid grid");
  // Leader and follower measures of the background, sampled at P.
  const std::size_t m = background.leaders(), n = background.followers();
  auto field = [&](const double* p, double* out) {
    for (int k = 0; k < d; ++k) out[k] = p[d + k];
    double dx[kMaxDim], dv[kMaxDim], h[kMaxDim];
    CompensatedSum acc_f[kMaxDim], acc_l[kMaxDim];
    auto add = [&](std::span<const double> xs, std::span<const double> vs, std::size_t count, CompensatedSum* acc) {
      const double w = 1.0 / static_cast<double>(count);
      for (std::size_t q = 0; q < count; ++q) {
        for (int k = 0; k < d; ++k) {
          dx[k] = p[k] - xs[q * d + k];
          dv[k] = p[d + k] - vs[q * d + k];
        }
        kernel.apply(dx, dv, h);
        for (int k = 0; k < d; ++k) acc[k].add(w * h[k]);
      }
    };
    if (n > 0) add(background.followers_x(), background.followers_v(), n, acc_f);
    add(background.leaders_y(), background.leaders_w(), m, acc_l);
    for (int k = 0; k < d; ++k) out[d + k] = acc_f[k].value() + acc_l[k].value();
  };
  std::vector<double> z(point.begin(), point.end());
  double k1[2 * kMaxDim], k2[2 * kMaxDim], k3[2 * kMaxDim], k4[2 * kMaxDim], t[2 * kMaxDim];
  const double h = horizon / static_cast<double>(n_steps);
  for (std::size_t s = 0; s < n_steps; ++s) {
    field(z.data(), k1);
    for (int j = 0; j < 2 * d; ++j) t[j] = z[j] + 0.5 * h * k1[j];
    field(t, k2);
    for (int j = 0; j < 2 * d; ++j) t[j] = z[j] + 0.5 * h * k2[j];
    field(t, k3);
    for (int j = 0; j < 2 * d; ++j) t[j] = z[j] + h * k3[j];
    field(t, k4);
    for (int j = 0; j < 2 * d; ++j) z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  return z;
}

double trajectory_support_radius(const Trajectory& traj) {
  double r = 0.0;
  for (const auto& c : traj.states) {
    const int d = c.dim();
    const auto pos = c.positions();
    const auto vel = c.velocities();
    for (std::size_t p = 0; p < c.particles(); ++p) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += pos[p * d + k] * pos[p * d + k] + vel[p * d + k] * vel[p * d + k];
      r = std::max(r, std::sqrt(s));
    }
  }
  return r;
}

}  // namespace mfsc
