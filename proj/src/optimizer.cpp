#include "mfsc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfsc/error.hpp"
#include "mfsc/numeric.hpp"

namespace mfsc {

std::string to_string(StepRule r) { return r == StepRule::growth ? "growth" : "barzilai_borwein"; }

StepRule step_rule_from_string(const std::string& name) {
  if (name == "growth") return StepRule::growth;
  if (name == "barzilai_borwein") return StepRule::barzilai_borwein;
  throw InvalidInput("unknown step rule '" + name + "'");
}

void OptimalControlProblem::validate() const {
  if (initial.dim() != kernel.dim()) throw InvalidInput("problem: kernel and initial data dimensions differ");
  if (initial.leaders() < 1) throw InvalidInput("problem: at least one leader required");
  if (!initial.finite()) throw InvalidInput("problem: initial data must be finite");
  if (!(horizon > 0.0)) throw InvalidInput("problem: T must be positive");
  if (cells < 1) throw InvalidInput("problem: at least one control cell required");
  if (!(radius > 0.0)) throw InvalidInput("problem: U must be positive");
  cost.validate(kernel.dim());
  if (options.max_iters < 1 || !(options.step0 > 0.0) || !(options.backtrack > 0.0 && options.backtrack < 1.0)) {
    throw InvalidInput("problem: invalid optimizer options");
  }
}

TimeGrid OptimalControlProblem::grid() const {
  const std::size_t n = n_steps != 0 ? n_steps : default_step_count(cells);
  return make_time_grid(zero_control(), n);
}

ControlSignal OptimalControlProblem::zero_control() const {
  return ControlSignal(initial.leaders(), initial.dim(), cells, horizon, radius);
}

namespace {

void check_control(const OptimalControlProblem& p, const ControlSignal& u) {
  if (u.leaders() != p.initial.leaders() || u.dim() != p.initial.dim() || u.cells() != p.cells ||
      u.horizon() != p.horizon || u.radius() != p.radius) {
    throw InvalidInput("control does not match the problem template");
  }
}

double weighted_running_sum(const Trajectory& traj, const RunningCost& cost) {
  return running_cost_integral(traj, cost);
}

}  // namespace

double smooth_cost(const OptimalControlProblem& p, const ControlSignal& u) {
  check_control(p, u);
  if (p.cost.weight == 0.0) return 0.0;
  IntegrateOptions io;
  io.backend = p.options.backend;
  const Trajectory traj = integrate(p.initial, u, p.kernel, p.grid(), io);
  return weighted_running_sum(traj, p.cost);
}

double objective(const OptimalControlProblem& p, const ControlSignal& u) {
  return smooth_cost(p, u) + control_l1_cost(u);
}

namespace {

Trajectory forward(const OptimalControlProblem& p, const ControlSignal& u) {
  IntegrateOptions io;
  io.backend = p.options.backend;
  io.keep_stages = true;
  return integrate(p.initial, u, p.kernel, p.grid(), io);
}

// Discrete adjoint of the RK4 scheme along a trajectory from forward().
SmoothEvaluation evaluate_along(const OptimalControlProblem& p, const ControlSignal& u, const Trajectory& traj) {
  SmoothEvaluation ev;
  ev.gradient.assign(u.values().size(), 0.0);
  if (p.cost.weight == 0.0) return ev;
  ev.value = weighted_running_sum(traj, p.cost);
  const std::vector<double> omega = trapezoid_weights(traj.times);

  const Kernel& K = p.kernel;
  const std::size_t m = p.initial.leaders(), n = p.initial.followers();
  const std::size_t len = p.initial.state().size();
  const Backend be = p.options.backend;
  std::vector<double> lambda(len, 0.0), zbar(len), g(len);
  std::vector<double> z2(len), z3(len), z4(len);
  std::vector<double> kb1(len), kb2(len), kb3(len), kb4(len);

  p.cost.add_gradient(traj.states.back(), omega.back(), lambda);
  for (std::size_t j = traj.step_cell.size(); j-- > 0;) {
    const auto z = traj.states[j].state();
    const double h = traj.times[j + 1] - traj.times[j];
    const std::size_t cell = traj.step_cell[j];
    const auto uc = u.cell(cell);
    std::span<double> ubar(ev.gradient.data() + cell * m * K.dim(), m * K.dim());

    // Stage points of the forward step.
    const double* k1 = traj.stages.data() + 3 * j * len;
    const double* k2 = k1 + len;
    const double* k3 = k2 + len;
    for (std::size_t i = 0; i < len; ++i) z2[i] = z[i] + 0.5 * h * k1[i];
    for (std::size_t i = 0; i < len; ++i) z3[i] = z[i] + 0.5 * h * k2[i];
    for (std::size_t i = 0; i < len; ++i) z4[i] = z[i] + h * k3[i];

    for (std::size_t i = 0; i < len; ++i) {
      kb1[i] = h / 6.0 * lambda[i];
      kb2[i] = h / 3.0 * lambda[i];
      kb3[i] = h / 3.0 * lambda[i];
      kb4[i] = h / 6.0 * lambda[i];
      zbar[i] = lambda[i];
    }
    std::fill(g.begin(), g.end(), 0.0);
    rhs_vjp(K, m, n, z4, kb4, g, ubar, be);
    for (std::size_t i = 0; i < len; ++i) {
      zbar[i] += g[i];
      kb3[i] += h * g[i];
    }
    std::fill(g.begin(), g.end(), 0.0);
    rhs_vjp(K, m, n, z3, kb3, g, ubar, be);
    for (std::size_t i = 0; i < len; ++i) {
      zbar[i] += g[i];
      kb2[i] += 0.5 * h * g[i];
    }
    std::fill(g.begin(), g.end(), 0.0);
    rhs_vjp(K, m, n, z2, kb2, g, ubar, be);
    for (std::size_t i = 0; i < len; ++i) {
      zbar[i] += g[i];
      kb1[i] += 0.5 * h * g[i];
    }
    std::fill(g.begin(), g.end(), 0.0);
    rhs_vjp(K, m, n, z, kb1, g, ubar, be);
    for (std::size_t i = 0; i < len; ++i) lambda[i] = zbar[i] + g[i];
    p.cost.add_gradient(traj.states[j], omega[j], lambda);
  }
  return ev;
}

}  // namespace

SmoothEvaluation smooth_cost_and_gradient(const OptimalControlProblem& p, const ControlSignal& u) {
  check_control(p, u);
  if (p.cost.weight == 0.0) return evaluate_along(p, u, {});
  return evaluate_along(p, u, forward(p, u));
}

void prox_l1_ball_inplace(std::span<double> v, double tau, double radius) noexcept {
  const double r = norm2(v);
  if (r <= tau) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  const double target = std::min(r - tau, radius);
  const double s = target / r;
  for (double& x : v) x *= s;
}

std::vector<double> prox_l1_ball(std::span<const double> v, double tau, double radius) {
  if (!(tau >= 0.0) || !(radius > 0.0)) throw InvalidInput("prox_l1_ball: need tau >= 0 and U > 0");
  std::vector<double> out(v.begin(), v.end());
  prox_l1_ball_inplace(out, tau, radius);
  return out;
}

SolveReport solve(const OptimalControlProblem& p) { return solve(p, p.zero_control()); }

SolveReport solve(const OptimalControlProblem& p, const ControlSignal& u0) {
  p.validate();
  check_control(p, u0);
  if (!u0.admissible(1e-12)) throw InvalidInput("solve: initial control is not admissible");
  const OptimizerOptions& opt = p.options;
  SolveReport rep;

  if (p.cost.weight == 0.0) {
    // Only the L1 term remains; its minimizer is u = 0.
    rep.history.push_back(control_l1_cost(u0));
    rep.control = p.zero_control();
    rep.history.push_back(0.0);
    rep.iterations = 1;
    rep.converged = true;
    rep.sparsity = 1.0;
    return rep;
  }

  const std::size_t m = p.initial.leaders();
  const int d = p.initial.dim();
  const double tau_unit = u0.cell_length() / static_cast<double>(m);

  ControlSignal u = u0;
  SmoothEvaluation ev = smooth_cost_and_gradient(p, u);
  double F = ev.value + control_l1_cost(u);
  const double J0 = F;
  rep.history.push_back(F);
  const double tol_J = opt.tol_J * (1.0 + std::fabs(J0));
  const double tol_u = opt.tol_u * p.radius;
  double eta = opt.step0;
  ControlSignal trial = u;
  Trajectory trial_traj;

  for (int it = 0; it < opt.max_iters; ++it) {
    bool accepted = false;
    bool fixed_point = false;
    double f_trial = 0.0, F_trial = 0.0;
    while (true) {
      auto tv = trial.values();
      const auto uv = u.values();
      for (std::size_t i = 0; i < tv.size(); ++i) tv[i] = uv[i] - eta * ev.gradient[i];
      for (std::size_t c = 0; c < p.cells; ++c) {
        for (std::size_t k = 0; k < m; ++k) prox_l1_ball_inplace(trial.value(c, k), eta * tau_unit, p.radius);
      }
      double lin = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < tv.size(); ++i) {
        const double dlt = tv[i] - uv[i];
        lin += ev.gradient[i] * dlt;
        sq += dlt * dlt;
      }
      if (sq == 0.0) {
        fixed_point = true;
        break;
      }
      trial_traj = forward(p, trial);
      f_trial = weighted_running_sum(trial_traj, p.cost);
      F_trial = f_trial + control_l1_cost(trial);
      if (f_trial <= ev.value + lin + sq / (2.0 * eta) && F_trial <= F) {
        accepted = true;
        break;
      }
      eta *= opt.backtrack;
      if (eta < opt.min_step) break;
    }
    if (fixed_point) {
      rep.converged = true;
      break;
    }
    if (!accepted) {
      rep.stalled = true;
      break;
    }
    double du = 0.0;
    for (std::size_t c = 0; c < p.cells; ++c) {
      for (std::size_t k = 0; k < m; ++k) {
        du = std::max(du, distance2(trial.value(c, k).data(), u.value(c, k).data(), d));
      }
    }
    const double dJ = F - F_trial;
    std::swap(u, trial);
    std::vector<double> g_prev = std::move(ev.gradient);
    ev = evaluate_along(p, u, trial_traj);
    F = ev.value + control_l1_cost(u);
    rep.history.push_back(F);
    ++rep.iterations;
    if (std::fabs(dJ) <= tol_J && du <= tol_u) {
      rep.converged = true;
      break;
    }
    double next = opt.step_growth * eta;
    if (opt.step_rule == StepRule::barzilai_borwein) {
      double ss = 0.0, sy = 0.0;
      const auto un = u.values(), uo = trial.values();
      for (std::size_t i = 0; i < un.size(); ++i) {
        const double si = un[i] - uo[i];
        ss += si * si;
        sy += si * (ev.gradient[i] - g_prev[i]);
      }
      if (sy > 0.0) next = std::max(ss / sy, opt.min_step);
    }
    eta = std::min(next, opt.max_step);
  }

  rep.control = u;
  rep.smooth_cost = ev.value;
  rep.l1_cost = control_l1_cost(u);
  rep.cost = F;
  rep.sparsity = sparsity_fraction(u);
  return rep;
}

SolveReport brute_force_solve(const OptimalControlProblem& p, int levels, std::size_t budget) {
  p.validate();
  if (levels < 1) throw InvalidInput("brute_force_solve: levels must be positive");
  const std::size_t m = p.initial.leaders();
  const int d = p.initial.dim();
  const std::size_t coords = p.cells * m * d;
  std::size_t count = 1;
  for (std::size_t i = 0; i < coords; ++i) {
    if (count > budget / static_cast<std::size_t>(levels)) {
      throw InvalidInput("brute_force_solve: candidate count exceeds budget " + std::to_string(budget));
    }
    count *= static_cast<std::size_t>(levels);
  }
  if (count > budget) throw InvalidInput("brute_force_solve: candidate count exceeds budget");

  std::vector<double> lattice(levels);
  for (int i = 0; i < levels; ++i) {
    lattice[i] = levels == 1 ? 0.0 : p.radius * static_cast<double>(2 * i - (levels - 1)) / (levels - 1);
  }
  OptimalControlProblem serial = p;
  serial.options.backend = Backend::serial;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> value(count, inf);
  std::vector<char> failed(count, 0);

  const auto total = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    ControlSignal u = serial.zero_control();
    auto v = u.values();
    std::size_t rest = static_cast<std::size_t>(idx);
    for (std::size_t i = coords; i-- > 0;) {
      v[i] = lattice[rest % levels];
      rest /= levels;
    }
    if (!u.admissible(1e-12)) continue;
    try {
      value[idx] = objective(serial, u);
    } catch (...) {
      failed[idx] = 1;
    }
  }
  if (std::find(failed.begin(), failed.end(), 1) != failed.end()) {
    throw IntegrationError("brute_force_solve: candidate integration failed", 0);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < count; ++i) {
    if (value[i] < value[best]) best = i;
  }
  if (!std::isfinite(value[best])) throw InvalidInput("brute_force_solve: no admissible lattice point");

  SolveReport rep;
  rep.control = p.zero_control();
  auto v = rep.control.values();
  std::size_t rest = best;
  for (std::size_t i = coords; i-- > 0;) {
    v[i] = lattice[rest % levels];
    rest /= levels;
  }
  rep.cost = value[best];
  rep.l1_cost = control_l1_cost(rep.control);
  rep.smooth_cost = rep.cost - rep.l1_cost;
  rep.history = {rep.cost};
  rep.sparsity = sparsity_fraction(rep.control);
  rep.iterations = count;
  rep.converged = true;
  return rep;
}

}  // namespace mfsc
