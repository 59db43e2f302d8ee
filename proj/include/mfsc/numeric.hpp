#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace mfsc {

// Largest supported spatial dimension d (phase space is R^{2d}).
inline constexpr int kMaxDim = 16;

// Neumaier compensated accumulator. Order-sensitive; callers fix the order.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) noexcept {
    const double t = sum + x;
    const bool big = std::fabs(sum) >= std::fabs(x);
    const double hi = big ? sum : x;
    const double lo = big ? x : sum;
    carry += (hi - t) + lo;
    sum = t;
  }
  double value() const noexcept { return sum + carry; }
};

inline double norm2(const double* a, int n) noexcept {
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += a[k] * a[k];
  return std::sqrt(s);
}

inline double norm2(std::span<const double> a) noexcept {
  return norm2(a.data(), static_cast<int>(a.size()));
}

inline double distance2(const double* a, const double* b, int n) noexcept {
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return std::sqrt(s);
}

inline bool all_finite(std::span<const double> a) noexcept {
  for (double x : a) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace mfsc
