#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfsc/measures.hpp"

namespace mfsc {

// Sparse optimal coupling: entry k moves mass[k] from row[k] to col[k].
struct TransportPlan {
  std::vector<std::size_t> row;
  std::vector<std::size_t> col;
  std::vector<double> mass;
  double cost = 0.0;
};

// Minimum-cost perfect matching on a dense n x n cost matrix (row-major).
// Shortest augmenting paths with potentials, O(n^3). Returns the total cost;
// `match[i]` is the column given to row i.
double solve_assignment(std::span<const double> cost, std::size_t n, std::vector<std::size_t>* match = nullptr);

// Exact balanced transportation problem on a dense n x m cost matrix by the
// transportation (network) simplex. Supplies and demands must be positive
// with equal totals. The optional orders seed the north-west-corner start.
TransportPlan solve_transportation(std::span<const double> supply, std::span<const double> demand,
                                   std::span<const double> cost, std::span<const std::size_t> row_order = {},
                                   std::span<const std::size_t> col_order = {});

// Optimal coupling between two measures under the Euclidean ground cost on
// R^{2d}. Equal-size uniform measures go through solve_assignment, all other
// pairs through solve_transportation.
TransportPlan optimal_transport(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// Exact W1(mu, nu).
double w1_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// (1/m) sum_k |xi_k - xi'_{pairing[k]}| for uniform measures with equally many
// atoms; always >= w1_distance. An empty pairing means index order.
double w1_atomic_upper_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                             std::span<const std::size_t> pairing = {});

}  // namespace mfsc
