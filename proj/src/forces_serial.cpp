// Reference loops. Kept single-threaded for bitwise comparison against the
// OpenMP versions in forces_parallel.cpp.

#include "force_kernels.hpp"

namespace mfsc::detail {

void interaction_forces_serial(const Kernel& kernel, const ParticleView& view, const ForcePlan& plan,
                               std::span<double> out) {
  const std::size_t n = view.particles();
  for (std::size_t p = 0; p < n; ++p) force_on(kernel, view, plan, p, out.data() + p * view.dim);
}

void interaction_forces_vjp_serial(const Kernel& kernel, const ParticleView& view, const ForcePlan& plan,
                                   std::span<const double> cot, std::span<double> grad_pos,
                                   std::span<double> grad_vel) {
  const int d = view.dim;
  const std::size_t n = view.particles();
  double gp[kMaxDim], gv[kMaxDim];
  for (std::size_t p = 0; p < n; ++p) {
    force_vjp_at(kernel, view, plan, cot.data(), p, gp, gv);
    for (int k = 0; k < d; ++k) {
      grad_pos[p * d + k] += gp[k];
      grad_vel[p * d + k] += gv[k];
    }
  }
}

}  // namespace mfsc::detail
