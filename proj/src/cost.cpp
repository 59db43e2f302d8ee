#include "mfsc/cost.hpp"

#include <algorithm>
#include <cmath>

#include "mfsc/error.hpp"
#include "mfsc/numeric.hpp"
#include "mfsc/wasserstein.hpp"

namespace mfsc {

std::string to_string(CostFamily f) {
  switch (f) {
    case CostFamily::velocity_consensus:
      return "velocity_consensus";
    case CostFamily::leader_tracking:
      return "leader_tracking";
    case CostFamily::measure_target:
      return "measure_target";
  }
  return "velocity_consensus";
}

CostFamily cost_family_from_string(const std::string& name) {
  if (name == "velocity_consensus") return CostFamily::velocity_consensus;
  if (name == "leader_tracking") return CostFamily::leader_tracking;
  if (name == "measure_target") return CostFamily::measure_target;
  throw InvalidInput("unknown cost family '" + name + "'");
}

void RunningCost::validate(int dim) const {
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw InvalidInput("running cost: gamma must be nonnegative");
  switch (family) {
    case CostFamily::velocity_consensus:
      break;
    case CostFamily::leader_tracking:
      if (target_y.size() != static_cast<std::size_t>(dim) || target_w.size() != static_cast<std::size_t>(dim)) {
        throw InvalidInput("leader_tracking: targets must have d components");
      }
      if (!all_finite(target_y) || !all_finite(target_w)) throw InvalidInput("leader_tracking: targets must be finite");
      if (!(position_weight >= 0.0) || !(velocity_weight >= 0.0)) {
        throw InvalidInput("leader_tracking: weights must be nonnegative");
      }
      break;
    case CostFamily::measure_target:
      if (!target) throw InvalidInput("measure_target: target measure required");
      if (target->dim() != dim) throw InvalidInput("measure_target: target dimension mismatch");
      break;
  }
}

namespace {

double consensus(std::span<const double> v, std::span<const double> weights, int d) {
  const std::size_t n = weights.size();
  double mean[kMaxDim];
  for (int k = 0; k < d; ++k) {
    CompensatedSum s;
    for (std::size_t i = 0; i < n; ++i) s.add(weights[i] * v[i * d + k]);
    mean[k] = s.value();
  }
  CompensatedSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (int k = 0; k < d; ++k) {
      const double t = v[i * d + k] - mean[k];
      r += t * t;
    }
    acc.add(weights[i] * r);
  }
  return acc.value();
}

double tracking(const RunningCost& c, std::span<const double> y, std::span<const double> w, int d) {
  const std::size_t m = y.size() / d;
  CompensatedSum acc;
  for (std::size_t k = 0; k < m; ++k) {
    double ey = 0.0, ew = 0.0;
    for (int j = 0; j < d; ++j) {
      const double a = y[k * d + j] - c.target_y[j];
      const double b = w[k * d + j] - c.target_w[j];
      ey += a * a;
      ew += b * b;
    }
    acc.add(c.position_weight * ey + c.velocity_weight * ew);
  }
  return acc.value() / static_cast<double>(m);
}

}  // namespace

double RunningCost::value(const Configuration& c) const {
  if (weight == 0.0) return 0.0;
  const int d = c.dim();
  switch (family) {
    case CostFamily::velocity_consensus: {
      if (c.followers() == 0) return 0.0;
      const std::vector<double> wts(c.followers(), 1.0 / static_cast<double>(c.followers()));
      return weight * consensus(c.followers_v(), wts, d);
    }
    case CostFamily::leader_tracking:
      return weight * tracking(*this, c.leaders_y(), c.leaders_w(), d);
    case CostFamily::measure_target:
      if (c.followers() == 0) return 0.0;
      return weight * w1_distance(followers_as_measure(c), *target);
  }
  return 0.0;
}

void RunningCost::add_gradient(const Configuration& c, double scale, std::span<double> grad) const {
  if (weight == 0.0 || scale == 0.0) return;
  const int d = c.dim();
  const std::size_t m = c.leaders(), n = c.followers();
  const std::size_t half = c.particles() * d;
  const double s = scale * weight;
  switch (family) {
    case CostFamily::velocity_consensus: {
      if (n == 0) return;
      const auto v = c.followers_v();
      double mean[kMaxDim];
      for (int k = 0; k < d; ++k) {
        CompensatedSum acc;
        for (std::size_t i = 0; i < n; ++i) acc.add(v[i * d + k]);
        mean[k] = acc.value() / static_cast<double>(n);
      }
      const double f = 2.0 * s / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) grad[half + (m + i) * d + k] += f * (v[i * d + k] - mean[k]);
      }
      return;
    }
    case CostFamily::leader_tracking: {
      const auto y = c.leaders_y();
      const auto w = c.leaders_w();
      const double f = 2.0 * s / static_cast<double>(m);
      for (std::size_t k = 0; k < m; ++k) {
        for (int j = 0; j < d; ++j) {
          grad[k * d + j] += f * position_weight * (y[k * d + j] - target_y[j]);
          grad[half + k * d + j] += f * velocity_weight * (w[k * d + j] - target_w[j]);
        }
      }
      return;
    }
    case CostFamily::measure_target: {
      if (n == 0) return;
      const EmpiricalMeasure mu = followers_as_measure(c);
      const TransportPlan plan = optimal_transport(mu, *target);
      const int pd = 2 * d;
      for (std::size_t e = 0; e < plan.mass.size(); ++e) {
        const auto xi = mu.atom(plan.row[e]);
        const auto eta = target->atom(plan.col[e]);
        const double r = distance2(xi.data(), eta.data(), pd);
        if (r == 0.0) continue;
        const double f = s * plan.mass[e] / r;
        const std::size_t i = m + plan.row[e];
        for (int k = 0; k < d; ++k) {
          grad[i * d + k] += f * (xi[k] - eta[k]);
          grad[half + i * d + k] += f * (xi[d + k] - eta[d + k]);
        }
      }
      return;
    }
  }
}

double running_cost(const RunningCost& cost, std::span<const double> y, std::span<const double> w,
                    const EmpiricalMeasure& mu) {
  const int d = mu.dim();
  if (y.size() != w.size() || y.empty() || y.size() % d != 0) throw InvalidInput("running_cost: bad leader arrays");
  if (cost.weight == 0.0) return 0.0;
  switch (cost.family) {
    case CostFamily::velocity_consensus: {
      std::vector<double> v(mu.size() * d);
      for (std::size_t i = 0; i < mu.size(); ++i) {
        const auto a = mu.atom(i);
        std::copy(a.begin() + d, a.end(), v.begin() + i * d);
      }
      return cost.weight * consensus(v, mu.weights(), d);
    }
    case CostFamily::leader_tracking:
      return cost.weight * tracking(cost, y, w, d);
    case CostFamily::measure_target:
      if (!cost.target) throw InvalidInput("measure_target: target measure required");
      return cost.weight * w1_distance(mu, *cost.target);
  }
  return 0.0;
}

std::vector<double> trapezoid_weights(std::span<const double> times) {
  std::vector<double> w(times.size(), 0.0);
  for (std::size_t j = 0; j + 1 < times.size(); ++j) {
    const double h = times[j + 1] - times[j];
    w[j] += 0.5 * h;
    w[j + 1] += 0.5 * h;
  }
  return w;
}

double running_cost_integral(const Trajectory& traj, const RunningCost& cost) {
  if (cost.weight == 0.0) return 0.0;
  const auto w = trapezoid_weights(traj.times);
  CompensatedSum acc;
  for (std::size_t j = 0; j < traj.states.size(); ++j) acc.add(w[j] * cost.value(traj.states[j]));
  return acc.value();
}

double total_cost(const Trajectory& traj, const ControlSignal& u, const RunningCost& cost) {
  if (traj.times.size() != traj.states.size() || traj.times.size() < 2) {
    throw InvalidInput("total_cost: malformed trajectory");
  }
  const double span = traj.times.back() - traj.times.front();
  const double tol = 1e-9 * span / static_cast<double>(traj.times.size() - 1);
  if (std::fabs(span - u.horizon()) > tol) throw InvalidInput("total_cost: trajectory and control horizons differ");
  for (std::size_t c = 1; c < u.cells(); ++c) {
    const double b = u.breakpoint(c);
    auto it = std::lower_bound(traj.times.begin(), traj.times.end(), b - tol);
    if (it == traj.times.end() || std::fabs(*it - b) > tol) {
      throw InvalidInput("total_cost: trajectory grid does not refine the control cells");
    }
  }
  return running_cost_integral(traj, cost) + control_l1_cost(u);
}

}  // namespace mfsc
