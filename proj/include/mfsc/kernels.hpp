#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfsc/numeric.hpp"

namespace mfsc {

class EmpiricalMeasure;

enum class KernelFamily { cucker_smale, repulsion_attraction, zero, custom_table };

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& name);

// H(x, v) = s * a(|x|) * v with a(r) = K / (sigma^2 + r^2)^beta.
struct CuckerSmaleParams {
  double strength = 1.0;  // K
  double scale = 1.0;     // sigma
  double exponent = 0.45; // beta
  double sign = -1.0;     // -1 aligns velocities under H * mu
};

// H(x, v) = f(max(|x|, eps)) * x with f(r) = sigma_r / r^4 - sigma_a / r^0.4.
struct RepulsionAttractionParams {
  double repulsion = 1.0;   // sigma_r
  double attraction = 1.0;  // sigma_a
  double cap = 1e-3;        // eps
};

// H(x, v) = s * a(|x|) * v with a piecewise linear through (radii, values),
// constant beyond the first and last knot.
struct TableParams {
  std::vector<double> radii;
  std::vector<double> values;
  double sign = -1.0;
};

// Interaction kernel H : R^{2d} -> R^d together with the constant C of the
// growth condition |H(xi)| <= C (1 + |xi|).
class Kernel {
 public:
  // The zero kernel in d = 1.
  Kernel() = default;

  static Kernel cucker_smale(int dim, const CuckerSmaleParams& p,
                             std::optional<double> growth_constant = {});
  static Kernel repulsion_attraction(int dim, const RepulsionAttractionParams& p,
                                     std::optional<double> growth_constant = {});
  static Kernel zero(int dim, double growth_constant = 1.0);
  static Kernel custom_table(int dim, TableParams p, std::optional<double> growth_constant = {});

  KernelFamily family() const noexcept { return family_; }
  int dim() const noexcept { return dim_; }
  double growth_constant() const noexcept { return growth_; }
  const CuckerSmaleParams& cucker_smale_params() const noexcept { return cs_; }
  const RepulsionAttractionParams& repulsion_attraction_params() const noexcept { return ra_; }
  const TableParams& table_params() const noexcept { return table_; }

  // Unchecked hot path: out = H(dx, dv), all arrays of length dim().
  void apply(const double* dx, const double* dv, double* out) const noexcept;

  // Unchecked: gdx = (dH/ddx)^T c, gdv = (dH/ddv)^T c.
  void apply_jacobian_transpose(const double* dx, const double* dv, const double* c, double* gdx,
                                double* gdv) const noexcept;

 private:
  double cs_rate(double r2) const noexcept;
  double cs_rate_slope_over_r(double r2) const noexcept;
  double table_rate(double r) const noexcept;
  double table_slope(double r) const noexcept;

  KernelFamily family_ = KernelFamily::zero;
  int dim_ = 1;
  double growth_ = 1.0;
  CuckerSmaleParams cs_;
  RepulsionAttractionParams ra_;
  TableParams table_;
};

inline double Kernel::cs_rate(double r2) const noexcept {
  const double base = cs_.scale * cs_.scale + r2;
  const double beta = cs_.exponent;
  if (beta == 0.0) return cs_.strength;
  if (beta == 0.5) return cs_.strength / std::sqrt(base);
  if (beta == 1.0) return cs_.strength / base;
  return cs_.strength * std::pow(base, -beta);
}

// a'(r) / r, smooth through r = 0.
inline double Kernel::cs_rate_slope_over_r(double r2) const noexcept {
  const double base = cs_.scale * cs_.scale + r2;
  return -2.0 * cs_.exponent * cs_rate(r2) / base;
}

inline void Kernel::apply(const double* dx, const double* dv, double* out) const noexcept {
  const int d = dim_;
  switch (family_) {
    case KernelFamily::zero:
      for (int k = 0; k < d; ++k) out[k] = 0.0;
      return;
    case KernelFamily::cucker_smale: {
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) r2 += dx[k] * dx[k];
      const double a = cs_.sign * cs_rate(r2);
      for (int k = 0; k < d; ++k) out[k] = a * dv[k];
      return;
    }
    case KernelFamily::repulsion_attraction: {
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) r2 += dx[k] * dx[k];
      const double r = std::max(std::sqrt(r2), ra_.cap);
      const double rr = r * r;
      const double f = ra_.repulsion / (rr * rr) - ra_.attraction / std::pow(r, 0.4);
      for (int k = 0; k < d; ++k) out[k] = f * dx[k];
      return;
    }
    case KernelFamily::custom_table: {
      const double a = table_.sign * table_rate(norm2(dx, d));
      for (int k = 0; k < d; ++k) out[k] = a * dv[k];
      return;
    }
  }
}

inline void Kernel::apply_jacobian_transpose(const double* dx, const double* dv, const double* c, double* gdx,
                                      double* gdv) const noexcept {
  const int d = dim_;
  switch (family_) {
    case KernelFamily::zero:
      for (int k = 0; k < d; ++k) gdx[k] = gdv[k] = 0.0;
      return;
    case KernelFamily::cucker_smale: {
      double r2 = 0.0, vc = 0.0;
      for (int k = 0; k < d; ++k) {
        r2 += dx[k] * dx[k];
        vc += dv[k] * c[k];
      }
      const double a = cs_.sign * cs_rate(r2);
      const double g = cs_.sign * cs_rate_slope_over_r(r2) * vc;
      for (int k = 0; k < d; ++k) {
        gdx[k] = g * dx[k];
        gdv[k] = a * c[k];
      }
      return;
    }
    case KernelFamily::repulsion_attraction: {
      double r2 = 0.0, xc = 0.0;
      for (int k = 0; k < d; ++k) {
        r2 += dx[k] * dx[k];
        xc += dx[k] * c[k];
      }
      const double r = std::sqrt(r2);
      const double rc = std::max(r, ra_.cap);
      const double rr = rc * rc;
      const double f = ra_.repulsion / (rr * rr) - ra_.attraction / std::pow(rc, 0.4);
      double radial = 0.0;
      if (r > ra_.cap) {
        const double fp = -4.0 * ra_.repulsion / (rr * rr * rc) + 0.4 * ra_.attraction / std::pow(rc, 1.4);
        radial = fp / r * xc;
      }
      for (int k = 0; k < d; ++k) {
        gdx[k] = f * c[k] + radial * dx[k];
        gdv[k] = 0.0;
      }
      return;
    }
    case KernelFamily::custom_table: {
      const double r = norm2(dx, d);
      double vc = 0.0;
      for (int k = 0; k < d; ++k) vc += dv[k] * c[k];
      const double a = table_.sign * table_rate(r);
      const double g = r > 0.0 ? table_.sign * table_slope(r) * vc / r : 0.0;
      for (int k = 0; k < d; ++k) {
        gdx[k] = g * dx[k];
        gdv[k] = a * c[k];
      }
      return;
    }
  }
}

// Checked evaluation of H(dx, dv).
std::vector<double> eval_kernel(const Kernel& kernel, std::span<const double> dx,
                                std::span<const double> dv);

// sum_l w_l H(query - xi_l) summed in a canonical atom order (lexicographic
// on atom coordinates, then weight) with compensated summation, so the bits
// do not depend on how the atoms were listed. `query` is a point of R^{2d}.
std::vector<double> convolve_empirical(const Kernel& kernel, const EmpiricalMeasure& atoms,
                                       std::span<const double> query);

// Axis-aligned sampling box in R^{2d}.
struct SampleBox {
  std::vector<double> lower;
  std::vector<double> upper;

  static SampleBox symmetric(int dim, double half_width);
};

struct GrowthEstimate {
  double estimate = 0.0;
  std::vector<double> witness;  // argmax point (x, v)
};

// max over sampled xi of |H(xi)| / (1 + |xi|). Throws GrowthBoundViolation
// when the estimate exceeds kernel.growth_constant().
GrowthEstimate estimate_growth_constant(const Kernel& kernel, const SampleBox& box,
                                        int n_samples, std::uint64_t seed);

// Largest Frobenius norm of the Jacobian of H over samples of the cube
// [-radius, radius]^{2d} (plus the origin). Upper-bounds the local spectral
// norm at each sample; used as the measured Lipschitz modulus of H.
double kernel_lipschitz_estimate(const Kernel& kernel, double radius, int n_samples,
                                 std::uint64_t seed);

}  // namespace mfsc
