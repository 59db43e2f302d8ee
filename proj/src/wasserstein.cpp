#include "mfsc/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mfsc/error.hpp"
#include "mfsc/numeric.hpp"

namespace mfsc {

double solve_assignment(std::span<const double> cost, std::size_t n, std::vector<std::size_t>* match) {
  if (n == 0 || cost.size() != n * n) throw InvalidInput("solve_assignment: cost must be a nonempty n x n matrix");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source of each augmentation.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> owner(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      const double* row = cost.data() + (i0 - 1) * n;
      const double ui0 = u[i0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - ui0 - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[owner[j] - 1] = j - 1;
  CompensatedSum total;
  for (std::size_t i = 0; i < n; ++i) total.add(cost[i * n + row_to_col[i]]);
  if (match) *match = std::move(row_to_col);
  return total.value();
}

namespace {

struct BasisEdge {
  std::size_t row;
  std::size_t col;
  double flow;
};

class TransportationSimplex {
 public:
  TransportationSimplex(std::span<const double> supply, std::span<const double> demand, std::span<const double> cost)
      : n_(supply.size()), m_(demand.size()), cost_(cost), adj_(n_ + m_), pot_(n_ + m_), parent_(n_ + m_),
        parent_edge_(n_ + m_), depth_(n_ + m_) {
    double cmax = 0.0;
    for (double c : cost_) cmax = std::max(cmax, std::fabs(c));
    tol_ = 1e-11 * std::max(cmax, std::numeric_limits<double>::min());
  }

  void north_west_start(std::span<const double> supply, std::span<const double> demand,
                        std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
    std::size_t a = 0, b = 0;
    double ra = supply[rows[0]], rb = demand[cols[0]];
    while (true) {
      const double f = std::min(ra, rb);
      add_edge({rows[a], cols[b], f});
      if (a + 1 == n_ && b + 1 == m_) break;
      ra -= f;
      rb -= f;
      const bool advance_row = (b + 1 == m_) || (a + 1 < n_ && ra <= rb);
      if (advance_row) {
        ++a;
        ra = supply[rows[a]];
      } else {
        ++b;
        rb = demand[cols[b]];
      }
    }
  }

  void run() {
    const std::size_t cells = n_ * m_;
    const std::size_t block = std::max<std::size_t>(64, static_cast<std::size_t>(std::sqrt(static_cast<double>(cells))));
    const std::size_t max_pivots = 64 * cells + 10'000;
    const std::size_t degenerate_limit = n_ + m_;
    std::size_t cursor = 0, degenerate_run = 0;
    bool bland = false;
    std::vector<std::size_t> path_a, path_b, cycle;
    for (std::size_t pivots = 0;; ++pivots) {
      if (pivots > max_pivots) throw std::runtime_error("transportation simplex exceeded its pivot budget");
      compute_potentials();

      // Pricing.
      std::size_t enter = cells;
      if (bland) {
        for (std::size_t k = 0; k < cells; ++k) {
          if (reduced_cost(k) < -tol_) {
            enter = k;
            break;
          }
        }
      } else {
        double best = -tol_;
        std::size_t scanned = 0;
        while (scanned < cells) {
          const std::size_t stop = std::min(scanned + block, cells);
          for (; scanned < stop; ++scanned) {
            const double rc = reduced_cost(cursor);
            if (rc < best) {
              best = rc;
              enter = cursor;
            }
            if (++cursor == cells) cursor = 0;
          }
          if (enter != cells) break;
        }
      }
      if (enter == cells) return;

      const std::size_t er = enter / m_, ec = enter % m_;
      // Tree path from column node to row node through their common ancestor.
      std::size_t a = n_ + ec, b = er;
      path_a.clear();
      path_b.clear();
      while (depth_[a] > depth_[b]) {
        path_a.push_back(parent_edge_[a]);
        a = parent_[a];
      }
      while (depth_[b] > depth_[a]) {
        path_b.push_back(parent_edge_[b]);
        b = parent_[b];
      }
      while (a != b) {
        path_a.push_back(parent_edge_[a]);
        a = parent_[a];
        path_b.push_back(parent_edge_[b]);
        b = parent_[b];
      }
      cycle.assign(path_a.begin(), path_a.end());
      cycle.insert(cycle.end(), path_b.rbegin(), path_b.rend());

      // Edges at even positions lose flow.
      std::size_t leave = cycle[0];
      double theta = edges_[leave].flow;
      for (std::size_t k = 2; k < cycle.size(); k += 2) {
        const BasisEdge& e = edges_[cycle[k]];
        const bool better = e.flow < theta || (bland && e.flow == theta && cell_of(e) < cell_of(edges_[leave]));
        if (better) {
          theta = e.flow;
          leave = cycle[k];
        }
      }
      for (std::size_t k = 0; k < cycle.size(); ++k) {
        if (cycle[k] == leave) continue;
        if (k % 2 == 0) {
          edges_[cycle[k]].flow -= theta;
        } else {
          edges_[cycle[k]].flow += theta;
        }
      }
      remove_adjacency(leave);
      edges_[leave] = {er, ec, theta};
      adj_[er].push_back(leave);
      adj_[n_ + ec].push_back(leave);

      if (theta == 0.0) {
        if (++degenerate_run > degenerate_limit) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
    }
  }

  TransportPlan plan() const {
    TransportPlan p;
    CompensatedSum total;
    for (const auto& e : edges_) {
      if (e.flow <= 0.0) continue;
      p.row.push_back(e.row);
      p.col.push_back(e.col);
      p.mass.push_back(e.flow);
      total.add(e.flow * cost_[e.row * m_ + e.col]);
    }
    p.cost = total.value();
    return p;
  }

 private:
  std::size_t cell_of(const BasisEdge& e) const { return e.row * m_ + e.col; }

  double reduced_cost(std::size_t k) const {
    return cost_[k] - pot_[k / m_] - pot_[n_ + k % m_];
  }

  void add_edge(BasisEdge e) {
    const std::size_t id = edges_.size();
    edges_.push_back(e);
    adj_[e.row].push_back(id);
    adj_[n_ + e.col].push_back(id);
  }

  void remove_adjacency(std::size_t id) {
    for (std::size_t node : {edges_[id].row, n_ + edges_[id].col}) {
      auto& list = adj_[node];
      const auto it = std::find(list.begin(), list.end(), id);
      *it = list.back();
      list.pop_back();
    }
  }

  // u_i + v_j = c_ij on basic cells; root row 0 has u_0 = 0.
  void compute_potentials() {
    stack_.clear();
    stack_.push_back(0);
    pot_[0] = 0.0;
    depth_[0] = 0;
    parent_[0] = 0;
    parent_edge_[0] = edges_.size();
    while (!stack_.empty()) {
      const std::size_t node = stack_.back();
      stack_.pop_back();
      for (std::size_t id : adj_[node]) {
        if (id == parent_edge_[node]) continue;
        const BasisEdge& e = edges_[id];
        const double c = cost_[e.row * m_ + e.col];
        const std::size_t other = node < n_ ? n_ + e.col : e.row;
        pot_[other] = c - pot_[node];
        parent_[other] = node;
        parent_edge_[other] = id;
        depth_[other] = depth_[node] + 1;
        stack_.push_back(other);
      }
    }
  }

  std::size_t n_, m_;
  std::span<const double> cost_;
  double tol_ = 0.0;
  std::vector<BasisEdge> edges_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<double> pot_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> parent_edge_;
  std::vector<std::size_t> depth_;
  std::vector<std::size_t> stack_;
};

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> o(n);
  std::iota(o.begin(), o.end(), std::size_t{0});
  return o;
}

std::vector<double> ground_costs(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  const std::size_t n = mu.size(), m = nu.size();
  const int p = mu.phase_dim();
  std::vector<double> c(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* a = mu.atom(i).data();
    for (std::size_t j = 0; j < m; ++j) c[i * m + j] = distance2(a, nu.atom(j).data(), p);
  }
  return c;
}

void check_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != nu.dim()) throw InvalidInput("W1: measures live in different dimensions");
}

}  // namespace

TransportPlan solve_transportation(std::span<const double> supply, std::span<const double> demand,
                                   std::span<const double> cost, std::span<const std::size_t> row_order,
                                   std::span<const std::size_t> col_order) {
  const std::size_t n = supply.size(), m = demand.size();
  if (n == 0 || m == 0) throw InvalidInput("solve_transportation: empty side");
  if (cost.size() != n * m) throw InvalidInput("solve_transportation: cost matrix shape mismatch");
  CompensatedSum sa, sb;
  for (double a : supply) {
    if (!(a > 0.0) || !std::isfinite(a)) throw InvalidInput("solve_transportation: supplies must be positive");
    sa.add(a);
  }
  for (double b : demand) {
    if (!(b > 0.0) || !std::isfinite(b)) throw InvalidInput("solve_transportation: demands must be positive");
    sb.add(b);
  }
  if (std::fabs(sa.value() - sb.value()) > 1e-9 * std::max(1.0, sa.value())) {
    throw InvalidInput("solve_transportation: unbalanced problem");
  }
  if (!all_finite(cost)) throw InvalidInput("solve_transportation: non-finite cost");
  std::vector<std::size_t> rows = row_order.empty() ? identity_order(n) : std::vector<std::size_t>(row_order.begin(), row_order.end());
  std::vector<std::size_t> cols = col_order.empty() ? identity_order(m) : std::vector<std::size_t>(col_order.begin(), col_order.end());
  if (rows.size() != n || cols.size() != m) throw InvalidInput("solve_transportation: order length mismatch");

  TransportationSimplex simplex(supply, demand, cost);
  simplex.north_west_start(supply, demand, rows, cols);
  simplex.run();
  return simplex.plan();
}

TransportPlan optimal_transport(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  check_pair(mu, nu);
  const std::size_t n = mu.size(), m = nu.size();
  const std::vector<double> cost = ground_costs(mu, nu);

  if (n == m && mu.is_uniform() && nu.is_uniform()) {
    std::vector<std::size_t> match;
    const double total = solve_assignment(cost, n, &match);
    TransportPlan p;
    p.row = identity_order(n);
    p.col = std::move(match);
    p.mass.assign(n, 1.0 / static_cast<double>(n));
    p.cost = total / static_cast<double>(n);
    return p;
  }

  // Start from the monotone coupling along the coordinate of largest spread.
  const int dims = mu.phase_dim();
  int axis = 0;
  double best_spread = -1.0;
  for (int k = 0; k < dims; ++k) {
    double lo = mu.atom(0)[k], hi = lo;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, mu.atom(i)[k]);
      hi = std::max(hi, mu.atom(i)[k]);
    }
    for (std::size_t j = 0; j < m; ++j) {
      lo = std::min(lo, nu.atom(j)[k]);
      hi = std::max(hi, nu.atom(j)[k]);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      axis = k;
    }
  }
  auto rows = identity_order(n);
  auto cols = identity_order(m);
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return mu.atom(a)[axis] < mu.atom(b)[axis]; });
  std::stable_sort(cols.begin(), cols.end(), [&](std::size_t a, std::size_t b) { return nu.atom(a)[axis] < nu.atom(b)[axis]; });
  return solve_transportation(mu.weights(), nu.weights(), cost, rows, cols);
}

namespace {

bool measure_less(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  const auto xa = a.atoms(), xb = b.atoms();
  if (!std::equal(xa.begin(), xa.end(), xb.begin())) {
    return std::lexicographical_compare(xa.begin(), xa.end(), xb.begin(), xb.end());
  }
  const auto wa = a.weights(), wb = b.weights();
  return std::lexicographical_compare(wa.begin(), wa.end(), wb.begin(), wb.end());
}

}  // namespace

double w1_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  // Fixed argument order makes the result bitwise symmetric.
  if (measure_less(nu, mu)) return optimal_transport(nu, mu).cost;
  return optimal_transport(mu, nu).cost;
}

double w1_atomic_upper_bound(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                             std::span<const std::size_t> pairing) {
  check_pair(mu, nu);
  const std::size_t n = mu.size();
  if (nu.size() != n) throw InvalidInput("w1_atomic_upper_bound: atom counts differ");
  if (!mu.is_uniform() || !nu.is_uniform()) throw InvalidInput("w1_atomic_upper_bound: measures must be uniform");
  if (!pairing.empty() && pairing.size() != n) throw InvalidInput("w1_atomic_upper_bound: pairing length mismatch");
  CompensatedSum s;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = pairing.empty() ? k : pairing[k];
    if (j >= n) throw InvalidInput("w1_atomic_upper_bound: pairing index out of range");
    s.add(distance2(mu.atom(k).data(), nu.atom(j).data(), mu.phase_dim()));
  }
  return s.value() / static_cast<double>(n);
}

}  // namespace mfsc
