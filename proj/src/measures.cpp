#include "mfsc/measures.hpp"

#include <algorithm>
#include <cmath>

#include "mfsc/error.hpp"
#include "mfsc/numeric.hpp"
#include "mfsc/random.hpp"
#include "mfsc/wasserstein.hpp"

namespace mfsc {

EmpiricalMeasure::EmpiricalMeasure(int dim, std::vector<double> atoms, std::vector<double> weights)
    : dim_(dim), atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (dim_ < 1 || dim_ > kMaxDim) throw InvalidInput("measure dimension out of range");
  const auto p = static_cast<std::size_t>(2 * dim_);
  if (weights_.empty()) throw InvalidInput("empirical measure must have at least one atom");
  if (atoms_.size() != weights_.size() * p) throw InvalidInput("atom array does not match weight count");
  if (!all_finite(atoms_)) throw InvalidInput("empirical measure has non-finite atoms");
  CompensatedSum total;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidInput("measure weights must be positive");
    total.add(w);
  }
  if (std::fabs(total.value() - 1.0) > 1e-12) throw InvalidInput("measure weights must sum to 1");
  uniform_ = std::all_of(weights_.begin(), weights_.end(), [&](double w) { return w == weights_.front(); });
}

EmpiricalMeasure EmpiricalMeasure::uniform(int dim, std::vector<double> atoms) {
  const auto p = static_cast<std::size_t>(2 * std::max(dim, 1));
  if (atoms.size() % p != 0) throw InvalidInput("atom array length is not a multiple of 2d");
  const std::size_t n = atoms.size() / p;
  if (n == 0) throw InvalidInput("empirical measure must have at least one atom");
  return EmpiricalMeasure(dim, std::move(atoms), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double EmpiricalMeasure::support_radius() const noexcept {
  double r = 0.0;
  for (std::size_t i = 0; i < size(); ++i) r = std::max(r, norm2(atom(i)));
  return r;
}

double EmpiricalMeasure::first_moment() const noexcept {
  CompensatedSum s;
  for (std::size_t i = 0; i < size(); ++i) s.add(weights_[i] * norm2(atom(i)));
  return s.value();
}

Configuration::Configuration(std::size_t leaders, std::size_t followers, int dim)
    : m_(leaders), n_(followers), d_(dim), state_(2 * (leaders + followers) * static_cast<std::size_t>(dim), 0.0) {
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("configuration dimension out of range");
  if (leaders < 1) throw InvalidInput("configuration needs at least one leader");
}

Configuration Configuration::from_parts(int dim, std::span<const double> y, std::span<const double> w,
                                        std::span<const double> x, std::span<const double> v) {
  if (dim < 1) throw InvalidInput("configuration dimension out of range");
  const auto d = static_cast<std::size_t>(dim);
  if (y.size() % d != 0 || y.size() != w.size() || x.size() % d != 0 || x.size() != v.size()) {
    throw InvalidInput("configuration blocks have inconsistent shapes");
  }
  Configuration c(y.size() / d, x.size() / d, dim);
  std::copy(y.begin(), y.end(), c.leaders_y().begin());
  std::copy(w.begin(), w.end(), c.leaders_w().begin());
  std::copy(x.begin(), x.end(), c.followers_x().begin());
  std::copy(v.begin(), v.end(), c.followers_v().begin());
  if (!c.finite()) throw InvalidInput("configuration has non-finite entries");
  return c;
}

Configuration Configuration::from_measure(int dim, std::span<const double> y, std::span<const double> w,
                                          const EmpiricalMeasure& followers) {
  if (followers.dim() != dim) throw InvalidInput("follower measure dimension mismatch");
  const auto d = static_cast<std::size_t>(dim);
  const std::size_t n = followers.size();
  std::vector<double> x(n * d), v(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = followers.atom(i);
    std::copy(a.begin(), a.begin() + dim, x.begin() + static_cast<std::ptrdiff_t>(i * d));
    std::copy(a.begin() + dim, a.end(), v.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return from_parts(dim, y, w, x, v);
}

bool Configuration::finite() const noexcept { return all_finite(state_); }

namespace {

double block_norm_sum(std::span<const double> a, std::span<const double> b, int d) {
  CompensatedSum s;
  const std::size_t n = a.size() / static_cast<std::size_t>(d);
  for (std::size_t i = 0; i < n; ++i) {
    s.add(norm2(a.data() + i * d, d));
    s.add(norm2(b.data() + i * d, d));
  }
  return s.value();
}

}  // namespace

double config_norm(const Configuration& c) {
  const int d = c.dim();
  double r = block_norm_sum(c.leaders_y(), c.leaders_w(), d) / static_cast<double>(c.leaders());
  if (c.followers() > 0) r += block_norm_sum(c.followers_x(), c.followers_v(), d) / static_cast<double>(c.followers());
  return r;
}

double config_distance(const Configuration& a, const Configuration& b) {
  if (a.leaders() != b.leaders() || a.followers() != b.followers() || a.dim() != b.dim()) {
    throw InvalidInput("config_distance: shape mismatch");
  }
  Configuration diff = a;
  auto s = diff.state();
  const auto t = b.state();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] -= t[i];
  return config_norm(diff);
}

EmpiricalMeasure followers_as_measure(const Configuration& c) {
  const auto d = static_cast<std::size_t>(c.dim());
  const std::size_t n = c.followers();
  if (n == 0) throw InvalidInput("configuration has no followers");
  std::vector<double> atoms(n * 2 * d);
  const auto x = c.followers_x();
  const auto v = c.followers_v();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(i * d), d, atoms.begin() + static_cast<std::ptrdiff_t>(2 * i * d));
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(i * d), d,
                atoms.begin() + static_cast<std::ptrdiff_t>(2 * i * d + d));
  }
  return EmpiricalMeasure::uniform(c.dim(), std::move(atoms));
}

EmpiricalMeasure leaders_as_measure(const Configuration& c) {
  const auto d = static_cast<std::size_t>(c.dim());
  const std::size_t m = c.leaders();
  std::vector<double> atoms(m * 2 * d);
  const auto y = c.leaders_y();
  const auto w = c.leaders_w();
  for (std::size_t k = 0; k < m; ++k) {
    std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(k * d), d, atoms.begin() + static_cast<std::ptrdiff_t>(2 * k * d));
    std::copy_n(w.begin() + static_cast<std::ptrdiff_t>(k * d), d,
                atoms.begin() + static_cast<std::ptrdiff_t>(2 * k * d + d));
  }
  return EmpiricalMeasure::uniform(c.dim(), std::move(atoms));
}

LeaderCloudState to_leader_cloud(const Configuration& c) {
  return LeaderCloudState{c.dim(), {c.leaders_y().begin(), c.leaders_y().end()},
                          {c.leaders_w().begin(), c.leaders_w().end()}, followers_as_measure(c)};
}

double x_metric(const LeaderCloudState& a, const LeaderCloudState& b) {
  if (a.dim != b.dim || a.y.size() != b.y.size() || a.w.size() != b.w.size() || a.y.size() != a.w.size()) {
    throw InvalidInput("x_metric: leader count or dimension mismatch");
  }
  const int d = a.dim;
  const std::size_t m = a.y.size() / static_cast<std::size_t>(d);
  if (m == 0) throw InvalidInput("x_metric: no leaders");
  CompensatedSum s;
  for (std::size_t k = 0; k < m; ++k) {
    s.add(distance2(a.y.data() + k * d, b.y.data() + k * d, d));
    s.add(distance2(a.w.data() + k * d, b.w.data() + k * d, d));
  }
  return s.value() / static_cast<double>(m) + w1_distance(a.followers, b.followers);
}

std::string to_string(DensityFamily f) {
  switch (f) {
    case DensityFamily::uniform_box:
      return "uniform-box";
    case DensityFamily::gaussian_truncated:
      return "gaussian-truncated";
    case DensityFamily::two_cluster:
      return "two-cluster";
  }
  return "uniform-box";
}

DensityFamily density_family_from_string(const std::string& name) {
  if (name == "uniform-box") return DensityFamily::uniform_box;
  if (name == "gaussian-truncated") return DensityFamily::gaussian_truncated;
  if (name == "two-cluster") return DensityFamily::two_cluster;
  throw InvalidInput("unsupported density family '" + name + "'");
}

void InitialDensitySpec::validate() const {
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("density dimension out of range");
  const auto p = static_cast<std::size_t>(2 * dim);
  auto check_vec = [&](const std::vector<double>& v, const char* name) {
    if (v.size() != p || !all_finite(v)) throw InvalidInput(std::string("density ") + name + " must have 2d finite entries");
  };
  switch (family) {
    case DensityFamily::uniform_box:
      check_vec(lower, "lower");
      check_vec(upper, "upper");
      for (std::size_t k = 0; k < p; ++k) {
        if (!(lower[k] <= upper[k])) throw InvalidInput("density box has lower > upper");
      }
      break;
    case DensityFamily::two_cluster:
      check_vec(mean_b, "mean_b");
      [[fallthrough]];
    case DensityFamily::gaussian_truncated:
      check_vec(mean, "mean");
      if (!(scale >= 0.0) || !std::isfinite(scale)) throw InvalidInput("density scale must be nonnegative");
      if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidInput("density truncation radius must be positive");
      break;
  }
}

double InitialDensitySpec::support_bound() const {
  switch (family) {
    case DensityFamily::uniform_box: {
      double s = 0.0;
      for (std::size_t k = 0; k < lower.size(); ++k) {
        const double a = std::max(std::fabs(lower[k]), std::fabs(upper[k]));
        s += a * a;
      }
      return std::sqrt(s);
    }
    case DensityFamily::gaussian_truncated:
      return norm2(mean) + radius;
    case DensityFamily::two_cluster:
      return std::max(norm2(mean), norm2(mean_b)) + radius;
  }
  return 0.0;
}

namespace {

// Truncated isotropic Gaussian around `center` by rejection.
void sample_truncated(StreamRng& rng, const std::vector<double>& center, double scale, double radius,
                      double* out) {
  const std::size_t p = center.size();
  if (scale == 0.0) {
    std::copy(center.begin(), center.end(), out);
    return;
  }
  constexpr int kMaxTries = 1'000'000;
  for (int tries = 0; tries < kMaxTries; ++tries) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      const double z = scale * rng.normal();
      out[k] = z;
      r2 += z * z;
    }
    if (std::sqrt(r2) <= radius) {
      for (std::size_t k = 0; k < p; ++k) out[k] += center[k];
      return;
    }
  }
  throw InvalidInput("truncated gaussian rejection sampler did not accept; radius too small for scale");
}

}  // namespace

EmpiricalMeasure sample_initial_measure(const InitialDensitySpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw InvalidInput("sample_initial_measure: N must be >= 1");
  const auto p = static_cast<std::size_t>(2 * spec.dim);
  std::vector<double> atoms(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    StreamRng rng(seed, i);
    double* out = atoms.data() + i * p;
    switch (spec.family) {
      case DensityFamily::uniform_box:
        for (std::size_t k = 0; k < p; ++k) out[k] = rng.uniform(spec.lower[k], spec.upper[k]);
        break;
      case DensityFamily::gaussian_truncated:
        sample_truncated(rng, spec.mean, spec.scale, spec.radius, out);
        break;
      case DensityFamily::two_cluster: {
        const bool second = (rng.bits() >> 63) != 0;
        sample_truncated(rng, second ? spec.mean_b : spec.mean, spec.scale, spec.radius, out);
        break;
      }
    }
  }
  return EmpiricalMeasure::uniform(spec.dim, std::move(atoms));
}

EmpiricalMeasure push_forward(const PointMap& map, const EmpiricalMeasure& mu) {
  const auto p = static_cast<std::size_t>(mu.phase_dim());
  std::vector<double> atoms(mu.size() * p);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    std::span<double> out(atoms.data() + i * p, p);
    map(mu.atom(i), out);
    if (!all_finite(out)) throw InvalidInput("push_forward: map produced a non-finite image");
  }
  return EmpiricalMeasure(mu.dim(), std::move(atoms), {mu.weights().begin(), mu.weights().end()});
}

}  // namespace mfsc
