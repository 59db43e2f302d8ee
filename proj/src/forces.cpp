#include "mfsc/forces.hpp"

#include <algorithm>
#include <numeric>

#include "force_kernels.hpp"
#include "mfsc/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mfsc {

std::vector<std::size_t> canonical_order(const ParticleView& view, std::size_t first, std::size_t count) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), first);
  const int d = view.dim;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (int k = 0; k < d; ++k) {
      const double xa = view.pos[a * d + k], xb = view.pos[b * d + k];
      if (xa != xb) return xa < xb;
    }
    for (int k = 0; k < d; ++k) {
      const double va = view.vel[a * d + k], vb = view.vel[b * d + k];
      if (va != vb) return va < vb;
    }
    return false;
  });
  return order;
}

namespace detail {

ForcePlan make_force_plan(const ParticleView& view) {
  ForcePlan plan;
  plan.leader_order = canonical_order(view, 0, view.leaders);
  plan.follower_order = canonical_order(view, view.leaders, view.followers);
  plan.leader_weight = view.leaders > 0 ? 1.0 / static_cast<double>(view.leaders) : 0.0;
  plan.follower_weight = view.followers > 0 ? 1.0 / static_cast<double>(view.followers) : 0.0;
  const int d = view.dim;
  plan.sources.reserve(2 * d * view.particles());
  for (const auto* order : {&plan.follower_order, &plan.leader_order}) {
    for (std::size_t q : *order) {
      plan.sources.insert(plan.sources.end(), view.pos + q * d, view.pos + (q + 1) * d);
      plan.sources.insert(plan.sources.end(), view.vel + q * d, view.vel + (q + 1) * d);
    }
  }
  return plan;
}

}  // namespace detail

namespace {

void check_view(const Kernel& kernel, const ParticleView& view, std::size_t span_size) {
  if (view.dim != kernel.dim()) throw InvalidInput("interaction forces: kernel dimension mismatch");
  if (span_size != view.particles() * static_cast<std::size_t>(view.dim)) {
    throw InvalidInput("interaction forces: output size mismatch");
  }
}

}  // namespace

void interaction_forces(const Kernel& kernel, const ParticleView& view, std::span<double> out, Backend backend) {
  check_view(kernel, view, out.size());
  const detail::ForcePlan plan = detail::make_force_plan(view);
  if (backend == Backend::serial) {
    detail::interaction_forces_serial(kernel, view, plan, out);
  } else {
    detail::interaction_forces_parallel(kernel, view, plan, out);
  }
}

void interaction_forces_vjp(const Kernel& kernel, const ParticleView& view, std::span<const double> cot,
                            std::span<double> grad_pos, std::span<double> grad_vel, Backend backend) {
  check_view(kernel, view, cot.size());
  check_view(kernel, view, grad_pos.size());
  check_view(kernel, view, grad_vel.size());
  const detail::ForcePlan plan = detail::make_force_plan(view);
  if (backend == Backend::serial) {
    detail::interaction_forces_vjp_serial(kernel, view, plan, cot, grad_pos, grad_vel);
  } else {
    detail::interaction_forces_vjp_parallel(kernel, view, plan, cot, grad_pos, grad_vel);
  }
}

void set_thread_count(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace mfsc
