#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfsc {

// Piecewise-constant u : [0, T] -> (R^d)^m on n_cells equal cells, each
// leader's value confined to the ball B(0, U). Values are stored cell-major:
// value(c, k) is the d-vector of leader k on cell c.
class ControlSignal {
 public:
  ControlSignal() = default;
  // All-zero signal.
  ControlSignal(std::size_t leaders, int dim, std::size_t cells, double horizon, double radius);
  ControlSignal(std::size_t leaders, int dim, std::size_t cells, double horizon, double radius,
                std::vector<double> values);

  std::size_t leaders() const noexcept { return m_; }
  int dim() const noexcept { return d_; }
  std::size_t cells() const noexcept { return cells_; }
  double horizon() const noexcept { return horizon_; }
  double radius() const noexcept { return radius_; }
  double cell_length() const noexcept { return horizon_ / static_cast<double>(cells_); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  // m*d values active on cell c.
  std::span<double> cell(std::size_t c) noexcept { return {values_.data() + c * m_ * d_, m_ * d_}; }
  std::span<const double> cell(std::size_t c) const noexcept { return {values_.data() + c * m_ * d_, m_ * d_}; }
  std::span<double> value(std::size_t c, std::size_t k) noexcept { return cell(c).subspan(k * d_, d_); }
  std::span<const double> value(std::size_t c, std::size_t k) const noexcept {
    return cell(c).subspan(k * d_, d_);
  }

  // Start of cell c, i.e. c T / n_cells; breakpoint(n_cells) = T.
  double breakpoint(std::size_t c) const noexcept;
  std::vector<double> breakpoints() const;
  // Cell containing t; the right end T belongs to the last cell.
  std::size_t cell_at(double t) const;

  // Every leader value satisfies |u| <= U (1 + rel_slack).
  bool admissible(double rel_slack = 0.0) const noexcept;

 private:
  std::size_t m_ = 0;
  int d_ = 1;
  std::size_t cells_ = 0;
  double horizon_ = 0.0;
  double radius_ = 0.0;
  std::vector<double> values_;
};

// Radial projection of every leader value onto B(0, U). Values already in
// the ball are returned bit-for-bit.
ControlSignal project_admissible(const ControlSignal& u);
void project_ball(std::span<double> v, double radius) noexcept;

// (1/m) sum_k int_0^T |u_k(t)| dt, exact for piecewise-constant signals.
double control_l1_cost(const ControlSignal& u);

// int_0^t u(s) ds as m*d values.
std::vector<double> control_primitive(const ControlSignal& u, double t);

// sup_t max_k |int_0^t (a_k - b_k)|. The difference of primitives is
// piecewise linear, so the sup is attained on the union of both breakpoint
// sets. Shapes (m, d, T) must match; cell counts may differ.
double primitive_deviation(const ControlSignal& a, const ControlSignal& b);

// Share of (cell, leader) values that are exactly zero.
double sparsity_fraction(const ControlSignal& u) noexcept;

}  // namespace mfsc
