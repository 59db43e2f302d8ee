#include "mfsc/limits.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "mfsc/error.hpp"
#include "mfsc/numeric.hpp"
#include "mfsc/random.hpp"
#include "mfsc/wasserstein.hpp"

namespace mfsc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool lookup(const std::vector<std::pair<std::string, bool>>& v, const std::string& name) {
  for (const auto& [k, ok] : v) {
    if (k == name) return ok;
  }
  throw InvalidInput("no verdict named '" + name + "'");
}

IntegrateOptions integrate_options(const LimitExperimentSpec& spec) {
  IntegrateOptions io;
  io.backend = spec.backend;
  return io;
}

double snapshot_distance(const Configuration& a, const Configuration& b) {
  return x_metric(to_leader_cloud(a), to_leader_cloud(b));
}

}  // namespace

bool ConvergenceReport::verdict(const std::string& name) const { return lookup(verdicts, name); }
bool StabilityReport::verdict(const std::string& name) const { return lookup(verdicts, name); }
bool SweepReport::verdict(const std::string& name) const { return lookup(verdicts, name); }

void LimitExperimentSpec::validate() const {
  followers.validate();
  const int d = followers.dim;
  if (leader_y.empty() || leader_y.size() % d != 0 || leader_w.size() != leader_y.size()) {
    throw InvalidInput("experiment: leader data must hold m*d values each, m >= 1");
  }
  if (kernel.dim() != d) throw InvalidInput("experiment: kernel dimension differs from the density");
  cost.validate(d);
  if (!(horizon > 0.0) || cells < 1 || !(radius > 0.0)) throw InvalidInput("experiment: invalid T, cells or U");
  if (!control_values.empty() && control_values.size() != cells * leaders() * d) {
    throw InvalidInput("experiment: control must hold cells*m*d values");
  }
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 1) throw InvalidInput("experiment: N_list entries must be positive");
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw InvalidInput("experiment: N_list must be strictly increasing");
  }
  if (eval_every < 1) throw InvalidInput("experiment: eval_every must be positive");
}

ControlSignal LimitExperimentSpec::control() const {
  if (control_values.empty()) return ControlSignal(leaders(), dim(), cells, horizon, radius);
  return ControlSignal(leaders(), dim(), cells, horizon, radius, control_values);
}

TimeGrid LimitExperimentSpec::grid() const {
  return make_time_grid(ControlSignal(leaders(), dim(), cells, horizon, radius),
                        n_steps != 0 ? n_steps : default_step_count(cells));
}

std::vector<std::size_t> LimitExperimentSpec::eval_indices() const {
  const std::size_t last = grid().instants.size() - 1;
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < last; j += eval_every) idx.push_back(j);
  idx.push_back(last);
  return idx;
}

Configuration LimitExperimentSpec::initial(std::size_t n, std::uint64_t s) const {
  const EmpiricalMeasure mu = sample_initial_measure(followers, n, s);
  return Configuration::from_measure(dim(), leader_y, leader_w, mu);
}

OptimalControlProblem LimitExperimentSpec::problem(std::size_t n, double gamma) const {
  OptimalControlProblem p;
  p.initial = initial(n, seed);
  p.kernel = kernel;
  p.cost = cost;
  p.cost.weight = gamma;
  p.horizon = horizon;
  p.cells = cells;
  p.radius = radius;
  p.n_steps = n_steps != 0 ? n_steps : default_step_count(cells);
  p.options = optimizer;
  p.options.backend = backend;
  return p;
}

bool decreasing_with_slack(const std::vector<double>& v, double slack) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    const bool ok = i == 1 ? v[1] <= (1.0 + slack) * v[0] : v[i] < v[i - 1];
    if (!ok) return false;
  }
  return true;
}

ConvergenceReport meanfield_convergence_experiment(const LimitExperimentSpec& spec, const ControlSignal& u) {
  spec.validate();
  if (spec.n_ref < 1) throw InvalidInput("meanfield: N_ref must be positive");
  const TimeGrid grid = make_time_grid(u, spec.n_steps != 0 ? spec.n_steps : default_step_count(u.cells()));
  std::vector<std::size_t> eval;
  for (std::size_t j = 0; j + 1 < grid.instants.size(); j += spec.eval_every) eval.push_back(j);
  eval.push_back(grid.instants.size() - 1);

  ConvergenceReport rep;
  rep.experiment = "meanfield";
  const auto t_ref = Clock::now();
  const Trajectory ref = integrate(spec.initial(spec.n_ref, spec.seed), u, spec.kernel, grid, integrate_options(spec));
  ConvergenceRow ref_row;
  ref_row.n = spec.n_ref;
  ref_row.cost = total_cost(ref, u, spec.cost);

  std::vector<double> distances;
  for (std::size_t n : spec.n_list) {
    ConvergenceRow row;
    row.n = n;
    const auto t0 = Clock::now();
    try {
      const Trajectory tr = integrate(spec.initial(n, spec.seed), u, spec.kernel, grid, integrate_options(spec));
      double sup = 0.0;
      for (std::size_t j : eval) sup = std::max(sup, snapshot_distance(tr.states[j], ref.states[j]));
      row.distance = sup;
      row.cost = total_cost(tr, u, spec.cost);
      row.cost_gap = std::fabs(row.cost - ref_row.cost);
      distances.push_back(sup);
    } catch (const std::exception& e) {
      row.failed = true;
      row.failure = e.what();
    }
    row.wall_seconds = seconds_since(t0);
    rep.rows.push_back(std::move(row));
  }
  ref_row.wall_seconds = seconds_since(t_ref);
  rep.rows.push_back(std::move(ref_row));
  const bool complete = distances.size() == spec.n_list.size();
  rep.verdicts.emplace_back("distance_decreasing", complete && decreasing_with_slack(distances, spec.monotone_slack));
  return rep;
}

StabilityReport stability_experiment(const LimitExperimentSpec& spec, const ControlSignal& u, double delta0,
                                     double slack) {
  spec.validate();
  if (!(delta0 > 0.0) || !std::isfinite(delta0)) throw InvalidInput("stability: delta0 must be positive");
  const std::size_t n = spec.stability_n != 0 ? spec.stability_n : (spec.n_list.empty() ? 0 : spec.n_list.front());
  if (n < 1) throw InvalidInput("stability: no follower count given");
  const int d = spec.dim();
  const TimeGrid grid = make_time_grid(u, spec.n_steps != 0 ? spec.n_steps : default_step_count(u.cells()));

  StabilityReport rep;
  rep.n = n;
  rep.delta0 = delta0;
  rep.slack = slack;
  bool all_within = true;
  for (std::size_t p = 0; p < spec.pairs; ++p) {
    const auto t0 = Clock::now();
    StabilityRow row;
    row.pair = p;
    row.seed = spec.seed + p;
    const Configuration a = spec.initial(n, row.seed);
    StreamRng rng(spec.seed, 0x5AB1E000ULL + p);
    Configuration b = a;
    auto pos = b.positions();
    double e[kMaxDim];
    for (std::size_t q = 0; q < b.particles(); ++q) {
      double len = 0.0;
      while (len == 0.0) {
        for (int k = 0; k < d; ++k) e[k] = rng.normal();
        len = norm2(e, d);
      }
      for (int k = 0; k < d; ++k) pos[q * d + k] += delta0 * e[k] / len;
    }
    const Trajectory ta = integrate(a, u, spec.kernel, grid, integrate_options(spec));
    const Trajectory tb = integrate(b, u, spec.kernel, grid, integrate_options(spec));
    row.initial_distance = snapshot_distance(ta.states.front(), tb.states.front());
    if (!(row.initial_distance > 0.0)) throw InvalidInput("stability: perturbation vanished (zero initial distance)");
    for (std::size_t j = 0; j < ta.states.size(); j += spec.eval_every) {
      row.sup_distance = std::max(row.sup_distance, snapshot_distance(ta.states[j], tb.states[j]));
    }
    row.sup_distance = std::max(row.sup_distance, snapshot_distance(ta.states.back(), tb.states.back()));
    row.ratio = row.sup_distance / row.initial_distance;
    const double r_t = std::max(trajectory_support_radius(ta), trajectory_support_radius(tb));
    row.kernel_lipschitz = kernel_lipschitz_estimate(spec.kernel, 2.0 * r_t, spec.lipschitz_samples, row.seed);
    row.rhs_lipschitz = 1.0 + 4.0 * row.kernel_lipschitz;
    row.bound = std::exp(row.rhs_lipschitz * u.horizon()) * (1.0 + slack);
    row.within = row.ratio <= row.bound;
    all_within = all_within && row.within;
    row.wall_seconds = seconds_since(t0);
    rep.rows.push_back(row);
  }
  rep.verdicts.emplace_back("within_gronwall", all_within);
  return rep;
}

ConvergenceReport gamma_convergence_experiment(const LimitExperimentSpec& spec) {
  spec.validate();
  if (spec.n_ref < 1) throw InvalidInput("gamma: N_ref must be positive");
  const ControlSignal u = spec.control();
  ConvergenceReport rep;
  rep.experiment = "gamma";

  std::vector<std::size_t> counts = spec.n_list;
  counts.push_back(spec.n_ref);
  ControlSignal warm = ControlSignal(spec.leaders(), spec.dim(), spec.cells, spec.horizon, spec.radius);
  for (std::size_t n : counts) {
    ConvergenceRow row;
    row.n = n;
    const auto t0 = Clock::now();
    try {
      const OptimalControlProblem p = spec.problem(n, spec.cost.weight);
      const Trajectory tr = integrate(p.initial, u, p.kernel, p.grid(), integrate_options(spec));
      row.cost = total_cost(tr, u, p.cost);
      const SolveReport sr = solve(p, warm);
      row.optimal_cost = sr.cost;
      row.sparsity = sr.sparsity;
      row.iterations = sr.iterations;
      row.converged = sr.converged;
      row.stalled = sr.stalled;
      row.control = sr.control;
      warm = sr.control;
    } catch (const std::exception& e) {
      row.failed = true;
      row.failure = e.what();
    }
    row.wall_seconds = seconds_since(t0);
    rep.rows.push_back(std::move(row));
  }

  const ConvergenceRow& ref = rep.rows.back();
  std::vector<double> gaps;
  bool complete = !ref.failed;
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
    ConvergenceRow& row = rep.rows[i];
    if (row.failed || ref.failed) {
      complete = false;
      continue;
    }
    row.cost_gap = std::fabs(row.cost - ref.cost);
    row.optimal_gap = std::fabs(row.optimal_cost - ref.optimal_cost);
    row.primitive_deviation = primitive_deviation(row.control, ref.control);
    gaps.push_back(row.cost_gap);
  }
  rep.verdicts.emplace_back("recovery_gap_decreasing", complete && decreasing_with_slack(gaps, spec.monotone_slack));
  const bool improves = complete && rep.rows.size() >= 3 &&
                        rep.rows[rep.rows.size() - 2].optimal_gap < rep.rows.front().optimal_gap;
  const bool trivial = complete && std::all_of(rep.rows.begin(), rep.rows.end() - 1, [](const ConvergenceRow& r) {
                         return r.optimal_gap == 0.0;
                       });
  rep.verdicts.emplace_back("optimal_gap_improves", improves || trivial);
  return rep;
}

SweepReport optimal_control_sweep(const LimitExperimentSpec& spec, const std::vector<double>& gamma_list) {
  spec.validate();
  if (gamma_list.empty()) throw InvalidInput("sweep: gamma_list must not be empty");
  for (double g : gamma_list) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidInput("sweep: gamma values must be nonnegative");
  }
  SweepReport rep;
  std::vector<std::size_t> order(gamma_list.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gamma_list[a] < gamma_list[b]; });

  bool monotone = true, zero_ok = true, intermediate = false;
  for (std::size_t n : spec.n_list) {
    const std::size_t first = rep.rows.size();
    for (double g : gamma_list) {
      const auto t0 = Clock::now();
      const OptimalControlProblem p = spec.problem(n, g);
      const SolveReport sr = solve(p);
      SweepRow row;
      row.n = n;
      row.gamma = g;
      row.optimal_cost = sr.cost;
      row.l1_cost = sr.l1_cost;
      row.sparsity = sr.sparsity;
      row.primitive_sup = primitive_deviation(sr.control, p.zero_control());
      row.iterations = sr.iterations;
      row.converged = sr.converged;
      row.stalled = sr.stalled;
      row.control = sr.control;
      row.wall_seconds = seconds_since(t0);
      if (g == 0.0 && row.sparsity != 1.0) zero_ok = false;
      if (g > 0.0 && row.sparsity > 0.0 && row.sparsity < 1.0) intermediate = true;
      rep.rows.push_back(std::move(row));
    }
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (rep.rows[first + order[i]].sparsity > rep.rows[first + order[i - 1]].sparsity) monotone = false;
    }
  }
  rep.verdicts.emplace_back("sparsity_monotone", monotone);
  rep.verdicts.emplace_back("zero_gamma_all_zero", zero_ok);
  rep.verdicts.emplace_back("intermediate_exact_zeros", intermediate);
  // Rows are N-major, gamma_list order within each N.
  bool cost_trend = true;
  const std::size_t ng = gamma_list.size();
  for (std::size_t i = 1; i < spec.n_list.size(); ++i) {
    for (std::size_t g = 0; g < ng; ++g) {
      const double prev = rep.rows[(i - 1) * ng + g].optimal_cost;
      if (rep.rows[i * ng + g].optimal_cost < prev - spec.monotone_slack * std::fabs(prev)) cost_trend = false;
    }
  }
  rep.verdicts.emplace_back("optimal_cost_nondecreasing_in_n", cost_trend);
  return rep;
}

}  // namespace mfsc
