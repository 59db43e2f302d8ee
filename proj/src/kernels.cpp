#include "mfsc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfsc/error.hpp"
#include "mfsc/measures.hpp"
#include "mfsc/random.hpp"

namespace mfsc {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw InvalidInput("kernel dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
}

double checked_growth(std::optional<double> declared, double derived) {
  const double c = declared.value_or(derived);
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidInput("growth constant must be positive and finite");
  return c;
}

void check_sign(double s) {
  if (s != 1.0 && s != -1.0) throw InvalidInput("kernel sign must be +1 or -1");
}

}  // namespace

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::cucker_smale:
      return "cucker_smale";
    case KernelFamily::repulsion_attraction:
      return "repulsion_attraction";
    case KernelFamily::zero:
      return "zero";
    case KernelFamily::custom_table:
      return "custom-table";
  }
  return "zero";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "cucker_smale") return KernelFamily::cucker_smale;
  if (name == "repulsion_attraction") return KernelFamily::repulsion_attraction;
  if (name == "zero") return KernelFamily::zero;
  if (name == "custom-table") return KernelFamily::custom_table;
  throw InvalidInput("unknown kernel family '" + name + "'");
}

Kernel Kernel::cucker_smale(int dim, const CuckerSmaleParams& p, std::optional<double> growth_constant) {
  check_dim(dim);
  if (!(p.strength > 0.0) || !std::isfinite(p.strength)) throw InvalidInput("cucker_smale K must be positive");
  if (!(p.scale > 0.0) || !std::isfinite(p.scale)) throw InvalidInput("cucker_smale sigma must be positive");
  if (!(p.exponent >= 0.0) || !std::isfinite(p.exponent)) {
    throw InvalidInput("cucker_smale beta must be nonnegative");
  }
  check_sign(p.sign);
  Kernel k;
  k.family_ = KernelFamily::cucker_smale;
  k.dim_ = dim;
  k.cs_ = p;
  // a is maximal at r = 0, and |H| <= a(0) |v| <= a(0) (1 + |xi|).
  k.growth_ = checked_growth(growth_constant, p.strength / std::pow(p.scale, 2.0 * p.exponent));
  return k;
}

Kernel Kernel::repulsion_attraction(int dim, const RepulsionAttractionParams& p,
                                   std::optional<double> growth_constant) {
  check_dim(dim);
  if (!(p.repulsion >= 0.0) || !(p.attraction >= 0.0) || !std::isfinite(p.repulsion) ||
      !std::isfinite(p.attraction)) {
    throw InvalidInput("repulsion_attraction sigma_r, sigma_a must be nonnegative");
  }
  if (!(p.cap > 0.0) || !std::isfinite(p.cap)) throw InvalidInput("repulsion_attraction epsilon must be positive");
  Kernel k;
  k.family_ = KernelFamily::repulsion_attraction;
  k.dim_ = dim;
  k.ra_ = p;
  // r >= eps: |f(r)| r <= sigma_r / eps^3 + sigma_a r^0.6, r^0.6 <= 1 + r.
  // r <  eps: |f(eps)| r <= sigma_r / eps^3 + sigma_a eps^0.6.
  double derived = p.repulsion / (p.cap * p.cap * p.cap) + p.attraction * std::max(1.0, std::pow(p.cap, 0.6));
  if (derived == 0.0) derived = 1.0;
  k.growth_ = checked_growth(growth_constant, derived);
  return k;
}

Kernel Kernel::zero(int dim, double growth_constant) {
  check_dim(dim);
  Kernel k;
  k.family_ = KernelFamily::zero;
  k.dim_ = dim;
  k.growth_ = checked_growth(growth_constant, 1.0);
  return k;
}

Kernel Kernel::custom_table(int dim, TableParams p, std::optional<double> growth_constant) {
  check_dim(dim);
  if (p.radii.empty() || p.radii.size() != p.values.size()) {
    throw InvalidInput("custom-table needs equally many radii and values (at least one)");
  }
  for (std::size_t i = 0; i < p.radii.size(); ++i) {
    if (!std::isfinite(p.radii[i]) || !std::isfinite(p.values[i]) || p.radii[i] < 0.0) {
      throw InvalidInput("custom-table knots must be finite with nonnegative radii");
    }
    if (i > 0 && !(p.radii[i] > p.radii[i - 1])) throw InvalidInput("custom-table radii must be strictly increasing");
  }
  check_sign(p.sign);
  double amax = 0.0;
  for (double a : p.values) amax = std::max(amax, std::fabs(a));
  Kernel k;
  k.family_ = KernelFamily::custom_table;
  k.dim_ = dim;
  k.table_ = std::move(p);
  k.growth_ = checked_growth(growth_constant, amax > 0.0 ? amax : 1.0);
  return k;
}

double Kernel::table_rate(double r) const noexcept {
  const auto& xs = table_.radii;
  const auto& ys = table_.values;
  if (r <= xs.front()) return ys.front();
  if (r >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), r);
  const std::size_t j = static_cast<std::size_t>(it - xs.begin());
  const double t = (r - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return ys[j - 1] + t * (ys[j] - ys[j - 1]);
}

double Kernel::table_slope(double r) const noexcept {
  const auto& xs = table_.radii;
  const auto& ys = table_.values;
  if (r <= xs.front() || r >= xs.back()) return 0.0;
  const auto it = std::upper_bound(xs.begin(), xs.end(), r);
  const std::size_t j = static_cast<std::size_t>(it - xs.begin());
  return (ys[j] - ys[j - 1]) / (xs[j] - xs[j - 1]);
}

std::vector<double> eval_kernel(const Kernel& kernel, std::span<const double> dx, std::span<const double> dv) {
  const auto d = static_cast<std::size_t>(kernel.dim());
  if (dx.size() != d || dv.size() != d) throw InvalidInput("eval_kernel: dimension mismatch");
  if (!all_finite(dx) || !all_finite(dv)) throw InvalidInput("eval_kernel: non-finite input");
  std::vector<double> out(d);
  kernel.apply(dx.data(), dv.data(), out.data());
  return out;
}

std::vector<double> convolve_empirical(const Kernel& kernel, const EmpiricalMeasure& atoms,
                                       std::span<const double> query) {
  const int d = kernel.dim();
  const auto p = static_cast<std::size_t>(2 * d);
  if (atoms.dim() != d) throw InvalidInput("convolve_empirical: measure dimension differs from kernel");
  if (query.size() != p) throw InvalidInput("convolve_empirical: query must lie in R^{2d}");
  if (!all_finite(query)) throw InvalidInput("convolve_empirical: non-finite query");

  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto xa = atoms.atom(a);
    const auto xb = atoms.atom(b);
    for (std::size_t k = 0; k < p; ++k) {
      if (xa[k] != xb[k]) return xa[k] < xb[k];
    }
    return atoms.weights()[a] < atoms.weights()[b];
  });

  CompensatedSum acc[kMaxDim];
  double dx[kMaxDim], dv[kMaxDim], h[kMaxDim];
  for (std::size_t idx : order) {
    const auto xi = atoms.atom(idx);
    const double wl = atoms.weights()[idx];
    for (int k = 0; k < d; ++k) {
      dx[k] = query[k] - xi[k];
      dv[k] = query[d + k] - xi[d + k];
    }
    kernel.apply(dx, dv, h);
    for (int k = 0; k < d; ++k) acc[k].add(wl * h[k]);
  }
  std::vector<double> out(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) out[k] = acc[k].value();
  return out;
}

SampleBox SampleBox::symmetric(int dim, double half_width) {
  return {std::vector<double>(2 * dim, -half_width), std::vector<double>(2 * dim, half_width)};
}

GrowthEstimate estimate_growth_constant(const Kernel& kernel, const SampleBox& box, int n_samples,
                                        std::uint64_t seed) {
  const int d = kernel.dim();
  const auto p = static_cast<std::size_t>(2 * d);
  if (n_samples < 1) throw InvalidInput("estimate_growth_constant: n_samples must be >= 1");
  if (box.lower.size() != p || box.upper.size() != p) {
    throw InvalidInput("estimate_growth_constant: box must have 2d bounds");
  }
  for (std::size_t k = 0; k < p; ++k) {
    if (!(box.lower[k] <= box.upper[k]) || !std::isfinite(box.lower[k]) || !std::isfinite(box.upper[k])) {
      throw InvalidInput("estimate_growth_constant: invalid box bounds");
    }
  }
  GrowthEstimate best;
  best.witness.assign(p, 0.0);
  std::vector<double> xi(p);
  double h[kMaxDim];
  for (int s = 0; s < n_samples; ++s) {
    StreamRng rng(seed, static_cast<std::uint64_t>(s));
    for (std::size_t k = 0; k < p; ++k) xi[k] = rng.uniform(box.lower[k], box.upper[k]);
    kernel.apply(xi.data(), xi.data() + d, h);
    const double ratio = norm2(h, d) / (1.0 + norm2(xi));
    if (ratio > best.estimate) {
      best.estimate = ratio;
      best.witness = xi;
    }
  }
  if (best.estimate > kernel.growth_constant()) {
    throw GrowthBoundViolation(best.estimate, kernel.growth_constant(), best.witness);
  }
  return best;
}

double kernel_lipschitz_estimate(const Kernel& kernel, double radius, int n_samples, std::uint64_t seed) {
  const int d = kernel.dim();
  if (!(radius >= 0.0) || n_samples < 0) throw InvalidInput("kernel_lipschitz_estimate: invalid arguments");
  std::vector<double> xi(static_cast<std::size_t>(2 * d), 0.0);
  double c[kMaxDim], gx[kMaxDim], gv[kMaxDim];
  auto frobenius = [&] {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) c[k] = (k == j) ? 1.0 : 0.0;
      kernel.apply_jacobian_transpose(xi.data(), xi.data() + d, c, gx, gv);
      for (int k = 0; k < d; ++k) s += gx[k] * gx[k] + gv[k] * gv[k];
    }
    return std::sqrt(s);
  };
  double best = frobenius();
  for (int s = 0; s < n_samples; ++s) {
    StreamRng rng(seed, static_cast<std::uint64_t>(s));
    for (auto& x : xi) x = rng.uniform(-radius, radius);
    best = std::max(best, frobenius());
  }
  return best;
}

}  // namespace mfsc
