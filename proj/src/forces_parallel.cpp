#include "force_kernels.hpp"

namespace mfsc::detail {

void interaction_forces_parallel(const Kernel& kernel, const ParticleView& view, const ForcePlan& plan,
                                 std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(view.particles());
  double* dst = out.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    force_on(kernel, view, plan, static_cast<std::size_t>(p), dst + p * view.dim);
  }
}

void interaction_forces_vjp_parallel(const Kernel& kernel, const ParticleView& view, const ForcePlan& plan,
                                     std::span<const double> cot, std::span<double> grad_pos,
                                     std::span<double> grad_vel) {
  const int d = view.dim;
  const auto n = static_cast<std::ptrdiff_t>(view.particles());
  double* gpos = grad_pos.data();
  double* gvel = grad_vel.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    double gp[kMaxDim], gv[kMaxDim];
    force_vjp_at(kernel, view, plan, cot.data(), static_cast<std::size_t>(p), gp, gv);
    for (int k = 0; k < d; ++k) {
      gpos[p * d + k] += gp[k];
      gvel[p * d + k] += gv[k];
    }
  }
}

}  // namespace mfsc::detail
