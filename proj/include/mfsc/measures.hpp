#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mfsc {

// Probability measure sum_l w_l delta_{xi_l} on phase space R^{2d}. Atoms are
// stored row-major as (x_1..x_d, v_1..v_d).
class EmpiricalMeasure {
 public:
  // Validates: nonempty, finite atoms, positive weights summing to 1 (1e-12).
  EmpiricalMeasure(int dim, std::vector<double> atoms, std::vector<double> weights);
  static EmpiricalMeasure uniform(int dim, std::vector<double> atoms);

  int dim() const noexcept { return dim_; }
  int phase_dim() const noexcept { return 2 * dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> atom(std::size_t i) const {
    return {atoms_.data() + i * static_cast<std::size_t>(2 * dim_), static_cast<std::size_t>(2 * dim_)};
  }
  std::span<const double> atoms() const noexcept { return atoms_; }
  std::span<const double> weights() const noexcept { return weights_; }
  bool is_uniform() const noexcept { return uniform_; }

  // sup_l |xi_l|
  double support_radius() const noexcept;
  // sum_l w_l |xi_l|
  double first_moment() const noexcept;

 private:
  int dim_;
  std::vector<double> atoms_;
  std::vector<double> weights_;
  bool uniform_ = false;
};

// Full state zeta = (y, w, x, v) of m leaders and N followers in R^d.
// Storage is [y (m*d) | x (N*d) | w (m*d) | v (N*d)]: all positions, then all
// velocities, leaders first in each block. Tangent vectors share the layout.
class Configuration {
 public:
  Configuration() = default;
  Configuration(std::size_t leaders, std::size_t followers, int dim);
  static Configuration from_parts(int dim, std::span<const double> y, std::span<const double> w,
                                  std::span<const double> x, std::span<const double> v);
  // Leaders given explicitly, followers from the atoms of a measure.
  static Configuration from_measure(int dim, std::span<const double> y, std::span<const double> w,
                                    const EmpiricalMeasure& followers);

  std::size_t leaders() const noexcept { return m_; }
  std::size_t followers() const noexcept { return n_; }
  std::size_t particles() const noexcept { return m_ + n_; }
  int dim() const noexcept { return d_; }

  std::span<double> state() noexcept { return state_; }
  std::span<const double> state() const noexcept { return state_; }
  std::span<double> positions() noexcept { return {state_.data(), particles() * d_}; }
  std::span<const double> positions() const noexcept { return {state_.data(), particles() * d_}; }
  std::span<double> velocities() noexcept { return {state_.data() + particles() * d_, particles() * d_}; }
  std::span<const double> velocities() const noexcept {
    return {state_.data() + particles() * d_, particles() * d_};
  }

  std::span<const double> leaders_y() const noexcept { return positions().first(m_ * d_); }
  std::span<const double> followers_x() const noexcept { return positions().subspan(m_ * d_); }
  std::span<const double> leaders_w() const noexcept { return velocities().first(m_ * d_); }
  std::span<const double> followers_v() const noexcept { return velocities().subspan(m_ * d_); }
  std::span<double> leaders_y() noexcept { return positions().first(m_ * d_); }
  std::span<double> followers_x() noexcept { return positions().subspan(m_ * d_); }
  std::span<double> leaders_w() noexcept { return velocities().first(m_ * d_); }
  std::span<double> followers_v() noexcept { return velocities().subspan(m_ * d_); }

  bool finite() const noexcept;

 private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  int d_ = 1;
  std::vector<double> state_;
};

// (1/m) sum_k (|y_k| + |w_k|) + (1/N) sum_i (|x_i| + |v_i|); N = 0 drops the
// follower term.
double config_norm(const Configuration& c);
// Same norm applied to the difference a - b (equal shapes).
double config_distance(const Configuration& a, const Configuration& b);

// Uniform measure of the followers of c (requires N >= 1).
EmpiricalMeasure followers_as_measure(const Configuration& c);
// Uniform measure of the leaders of c.
EmpiricalMeasure leaders_as_measure(const Configuration& c);

// Point of the state space X = R^{2dm} x P_1(R^{2d}).
struct LeaderCloudState {
  int dim = 1;
  std::vector<double> y;  // m*d
  std::vector<double> w;  // m*d
  EmpiricalMeasure followers;
};

LeaderCloudState to_leader_cloud(const Configuration& c);

// (1/m) sum_k (|y_k - y'_k| + |w_k - w'_k|) + W1(mu, mu').
double x_metric(const LeaderCloudState& a, const LeaderCloudState& b);

enum class DensityFamily { uniform_box, gaussian_truncated, two_cluster };

std::string to_string(DensityFamily f);
DensityFamily density_family_from_string(const std::string& name);

// Initial follower density on R^{2d}.
//  uniform_box:        lower, upper (2d each)
//  gaussian_truncated: mean (2d), scale, radius; atoms satisfy |xi - mean| <= radius
//  two_cluster:        mean, mean_b, scale, radius; fair coin between the two
struct InitialDensitySpec {
  DensityFamily family = DensityFamily::uniform_box;
  int dim = 1;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> mean;
  std::vector<double> mean_b;
  double scale = 1.0;
  double radius = 1.0;

  void validate() const;
  // R with supp mu0 contained in B(0, R).
  double support_bound() const;
};

// N i.i.d. atoms, uniform weights. Atom i depends only on (seed, i), so a
// larger N extends the cloud of a smaller N with the same seed.
EmpiricalMeasure sample_initial_measure(const InitialDensitySpec& spec, std::size_t n,
                                        std::uint64_t seed);

using PointMap = std::function<void(std::span<const double> in, std::span<double> out)>;

// Atoms mapped pointwise, weights kept.
EmpiricalMeasure push_forward(const PointMap& map, const EmpiricalMeasure& mu);

}  // namespace mfsc
