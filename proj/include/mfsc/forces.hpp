#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfsc/kernels.hpp"

namespace mfsc {

// Loop strategy for the O((m+N)^2) interaction sums. Both produce identical
// bits: every particle's sum runs in the same canonical source order, only
// the distribution of particles over threads differs.
enum class Backend { serial, parallel };

// Positions and velocities of all m + N particles, leaders first, each array
// (m+N)*d long (the Configuration layout).
struct ParticleView {
  std::size_t leaders = 0;
  std::size_t followers = 0;
  int dim = 1;
  const double* pos = nullptr;
  const double* vel = nullptr;

  std::size_t particles() const noexcept { return leaders + followers; }
};

// Indices [first, first+count) sorted lexicographically by (x, v).
std::vector<std::size_t> canonical_order(const ParticleView& view, std::size_t first, std::size_t count);

// out[p] = H * mu_N (xi_p) + H * mu_m (xi_p) for every particle p; the
// follower term is absent when N = 0.
void interaction_forces(const Kernel& kernel, const ParticleView& view, std::span<double> out,
                        Backend backend = Backend::parallel);

// Reverse-mode product: given cotangents `cot` on the forces, adds the
// cotangents of positions and velocities into grad_pos / grad_vel.
void interaction_forces_vjp(const Kernel& kernel, const ParticleView& view, std::span<const double> cot,
                            std::span<double> grad_pos, std::span<double> grad_vel,
                            Backend backend = Backend::parallel);

// Worker threads used by Backend::parallel (no-op without OpenMP).
void set_thread_count(int threads);
int thread_count();

}  // namespace mfsc
