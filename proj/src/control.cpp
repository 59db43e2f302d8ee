#include "mfsc/control.hpp"

#include <algorithm>
#include <cmath>

#include "mfsc/error.hpp"
#include "mfsc/numeric.hpp"

namespace mfsc {

ControlSignal::ControlSignal(std::size_t leaders, int dim, std::size_t cells, double horizon, double radius)
    : ControlSignal(leaders, dim, cells, horizon, radius, std::vector<double>(leaders * cells * dim, 0.0)) {}

ControlSignal::ControlSignal(std::size_t leaders, int dim, std::size_t cells, double horizon, double radius,
                             std::vector<double> values)
    : m_(leaders), d_(dim), cells_(cells), horizon_(horizon), radius_(radius), values_(std::move(values)) {
  if (m_ < 1) throw InvalidInput("control: at least one leader required");
  if (d_ < 1 || d_ > kMaxDim) throw InvalidInput("control: dimension out of range");
  if (cells_ < 1) throw InvalidInput("control: at least one cell required");
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw InvalidInput("control: horizon must be positive");
  if (!(radius_ > 0.0)) throw InvalidInput("control: U must be positive");
  if (values_.size() != m_ * cells_ * static_cast<std::size_t>(d_)) {
    throw InvalidInput("control: expected cells*m*d values");
  }
  if (!all_finite(values_)) throw InvalidInput("control: values must be finite");
}

double ControlSignal::breakpoint(std::size_t c) const noexcept {
  if (c >= cells_) return horizon_;
  return horizon_ * static_cast<double>(c) / static_cast<double>(cells_);
}

std::vector<double> ControlSignal::breakpoints() const {
  std::vector<double> out(cells_ + 1);
  for (std::size_t c = 0; c <= cells_; ++c) out[c] = breakpoint(c);
  return out;
}

std::size_t ControlSignal::cell_at(double t) const {
  if (!(t >= 0.0) || t > horizon_) throw InvalidInput("control: time outside [0, T]");
  auto c = static_cast<std::size_t>(std::floor(t / horizon_ * static_cast<double>(cells_)));
  c = std::min(c, cells_ - 1);
  // Floor of the scaled time can disagree with breakpoint() by one ulp.
  while (c > 0 && t < breakpoint(c)) --c;
  while (c + 1 < cells_ && t >= breakpoint(c + 1)) ++c;
  return c;
}

bool ControlSignal::admissible(double rel_slack) const noexcept {
  const double cap = radius_ * (1.0 + rel_slack);
  for (std::size_t c = 0; c < cells_; ++c) {
    for (std::size_t k = 0; k < m_; ++k) {
      if (norm2(value(c, k)) > cap) return false;
    }
  }
  return true;
}

void project_ball(std::span<double> v, double radius) noexcept {
  const double n = norm2(v);
  if (n <= radius) return;
  const double s = radius / n;
  for (double& x : v) x *= s;
}

ControlSignal project_admissible(const ControlSignal& u) {
  ControlSignal out = u;
  for (std::size_t c = 0; c < out.cells(); ++c) {
    for (std::size_t k = 0; k < out.leaders(); ++k) project_ball(out.value(c, k), out.radius());
  }
  return out;
}

double control_l1_cost(const ControlSignal& u) {
  CompensatedSum acc;
  for (std::size_t c = 0; c < u.cells(); ++c) {
    for (std::size_t k = 0; k < u.leaders(); ++k) acc.add(norm2(u.value(c, k)));
  }
  return u.cell_length() * acc.value() / static_cast<double>(u.leaders());
}

std::vector<double> control_primitive(const ControlSignal& u, double t) {
  if (!(t >= 0.0) || t > u.horizon()) throw InvalidInput("control_primitive: t outside [0, T]");
  const std::size_t md = u.leaders() * u.dim();
  std::vector<double> out(md, 0.0);
  for (std::size_t c = 0; c < u.cells(); ++c) {
    const double a = u.breakpoint(c);
    if (a >= t) break;
    const double len = std::min(t, u.breakpoint(c + 1)) - a;
    const auto vals = u.cell(c);
    for (std::size_t j = 0; j < md; ++j) out[j] += len * vals[j];
  }
  return out;
}

double primitive_deviation(const ControlSignal& a, const ControlSignal& b) {
  if (a.leaders() != b.leaders() || a.dim() != b.dim() || a.horizon() != b.horizon()) {
    throw InvalidInput("primitive_deviation: signals of different shape");
  }
  std::vector<double> times = a.breakpoints();
  const auto tb = b.breakpoints();
  times.insert(times.end(), tb.begin(), tb.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  const int d = a.dim();
  double sup = 0.0;
  for (double t : times) {
    const auto pa = control_primitive(a, t);
    const auto pb = control_primitive(b, t);
    for (std::size_t k = 0; k < a.leaders(); ++k) {
      sup = std::max(sup, distance2(pa.data() + k * d, pb.data() + k * d, d));
    }
  }
  return sup;
}

double sparsity_fraction(const ControlSignal& u) noexcept {
  if (u.cells() == 0) return 1.0;
  std::size_t zeros = 0;
  for (std::size_t c = 0; c < u.cells(); ++c) {
    for (std::size_t k = 0; k < u.leaders(); ++k) {
      const auto v = u.value(c, k);
      if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) ++zeros;
    }
  }
  return static_cast<double>(zeros) / static_cast<double>(u.cells() * u.leaders());
}

}  // namespace mfsc
