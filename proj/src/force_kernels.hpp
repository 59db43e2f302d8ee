#pragma once

// Per-particle bodies shared by the serial and OpenMP loops.

#include <span>
#include <vector>

#include "mfsc/forces.hpp"
#include "mfsc/numeric.hpp"

namespace mfsc::detail {

struct ForcePlan {
  std::vector<std::size_t> leader_order;
  std::vector<std::size_t> follower_order;
  double leader_weight = 0.0;
  double follower_weight = 0.0;
  // Sources in summation order, followers then leaders, each as (x, v).
  std::vector<double> sources;
};

ForcePlan make_force_plan(const ParticleView& view);

// Cucker-Smale evaluation with the same operation order as Kernel::apply.
struct CuckerSmaleEval {
  double strength, scale2, beta, sign;

  explicit CuckerSmaleEval(const CuckerSmaleParams& p)
      : strength(p.strength), scale2(p.scale * p.scale), beta(p.exponent), sign(p.sign) {}

  double rate(double base) const noexcept {
    if (beta == 0.0) return strength;
    if (beta == 0.5) return strength / std::sqrt(base);
    if (beta == 1.0) return strength / base;
    return strength * std::pow(base, -beta);
  }
};

template <int D>
void force_on_cs(const CuckerSmaleEval& cs, const ParticleView& view, const ForcePlan& plan, std::size_t p,
                 double* out) noexcept {
  const double* xp = view.pos + p * D;
  const double* vp = view.vel + p * D;
  CompensatedSum from_followers[D];
  CompensatedSum from_leaders[D];
  const double* src = plan.sources.data();
  auto accumulate = [&](std::size_t count, double weight, CompensatedSum* acc) {
    for (std::size_t j = 0; j < count; ++j, src += 2 * D) {
      double r2 = 0.0;
      for (int k = 0; k < D; ++k) {
        const double dx = xp[k] - src[k];
        r2 += dx * dx;
      }
      const double a = cs.sign * cs.rate(cs.scale2 + r2);
      for (int k = 0; k < D; ++k) acc[k].add(weight * (a * (vp[k] - src[D + k])));
    }
  };
  accumulate(plan.follower_order.size(), plan.follower_weight, from_followers);
  accumulate(plan.leader_order.size(), plan.leader_weight, from_leaders);
  for (int k = 0; k < D; ++k) out[k] = from_followers[k].value() + from_leaders[k].value();
}

inline void force_on_generic(const Kernel& kernel, const ParticleView& view, const ForcePlan& plan,
                             std::size_t p, double* out) noexcept {
  const int d = view.dim;
  const double* xp = view.pos + p * d;
  const double* vp = view.vel + p * d;
  double dx[kMaxDim], dv[kMaxDim], h[kMaxDim];
  CompensatedSum from_followers[kMaxDim];
  CompensatedSum from_leaders[kMaxDim];
  const double* src = plan.sources.data();
  auto accumulate = [&](std::size_t count, double weight, CompensatedSum* acc) {
    for (std::size_t j = 0; j < count; ++j, src += 2 * d) {
      for (int k = 0; k < d; ++k) {
        dx[k] = xp[k] - src[k];
        dv[k] = vp[k] - src[d + k];
      }
      kernel.apply(dx, dv, h);
      for (int k = 0; k < d; ++k) acc[k].add(weight * h[k]);
    }
  };
  accumulate(plan.follower_order.size(), plan.follower_weight, from_followers);
  accumulate(plan.leader_order.size(), plan.leader_weight, from_leaders);
  for (int k = 0; k < d; ++k) out[k] = from_followers[k].value() + from_leaders[k].value();
}

// d/dxi_p of sum_q sum_r w_r H(xi_q - xi_r) . cot_q, gathered at particle p.
template <int D>
void force_vjp_at_cs(const CuckerSmaleEval& cs, const ParticleView& view, const ForcePlan& plan,
                     const double* cot, std::size_t p, double* gpos, double* gvel) noexcept {
  const std::size_t n = view.particles();
  const double* xp = view.pos + p * D;
  const double* vp = view.vel + p * D;
  const double* ap = cot + p * D;
  const double wp = p < view.leaders ? plan.leader_weight : plan.follower_weight;
  double dx[D], dv[D];
  for (int k = 0; k < D; ++k) gpos[k] = gvel[k] = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    if (q == p) continue;
    const double* xq = view.pos + q * D;
    const double* vq = view.vel + q * D;
    const double* aq = cot + q * D;
    const double wq = q < view.leaders ? plan.leader_weight : plan.follower_weight;
    double r2 = 0.0, vc = 0.0, vcq = 0.0;
    for (int k = 0; k < D; ++k) {
      dx[k] = xp[k] - xq[k];
      dv[k] = vp[k] - vq[k];
      r2 += dx[k] * dx[k];
      vc += dv[k] * ap[k];
      vcq += -dv[k] * aq[k];
    }
    const double base = cs.scale2 + r2;
    const double rate = cs.rate(base);
    const double a = cs.sign * rate;
    const double slope = cs.sign * (-2.0 * cs.beta * rate / base);
    const double g = slope * vc;
    const double gq = slope * vcq;
    for (int k = 0; k < D; ++k) {
      gpos[k] += wq * (g * dx[k]);
      gvel[k] += wq * (a * ap[k]);
      gpos[k] -= wp * (gq * -dx[k]);
      gvel[k] -= wp * (a * aq[k]);
    }
  }
}

inline void force_vjp_at_generic(const Kernel& kernel, const ParticleView& view, const ForcePlan& plan,
                                 const double* cot, std::size_t p, double* gpos, double* gvel) noexcept {

  const int d = view.dim;
  const std::size_t n = view.particles();
  const double* xp = view.pos + p * d;
  const double* vp = view.vel + p * d;
  const double* ap = cot + p * d;
  const double wp = p < view.leaders ? plan.leader_weight : plan.follower_weight;
  double dx[kMaxDim], dv[kMaxDim], gx[kMaxDim], gv[kMaxDim];
  for (int k = 0; k < d; ++k) gpos[k] = gvel[k] = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    if (q == p) continue;  // H(0) terms cancel between the two sums
    const double* xq = view.pos + q * d;
    const double* vq = view.vel + q * d;
    const double wq = q < view.leaders ? plan.leader_weight : plan.follower_weight;
    for (int k = 0; k < d; ++k) {
      dx[k] = xp[k] - xq[k];
      dv[k] = vp[k] - vq[k];
    }
    // p as the target of q
    kernel.apply_jacobian_transpose(dx, dv, ap, gx, gv);
    for (int k = 0; k < d; ++k) {
      gpos[k] += wq * gx[k];
      gvel[k] += wq * gv[k];
    }
    // p as a source acting on q
    for (int k = 0; k < d; ++k) {
      dx[k] = -dx[k];
      dv[k] = -dv[k];
    }
    kernel.apply_jacobian_transpose(dx, dv, cot + q * d, gx, gv);
    for (int k = 0; k < d; ++k) {
      gpos[k] -= wp * gx[k];
      gvel[k] -= wp * gv[k];
    }
  }
}

inline void force_on(const Kernel& kernel, const ParticleView& view, const ForcePlan& plan, std::size_t p,
                     double* out) noexcept {
  if (kernel.family() == KernelFamily::cucker_smale) {
    const CuckerSmaleEval cs(kernel.cucker_smale_params());
    switch (view.dim) {
      case 1: return force_on_cs<1>(cs, view, plan, p, out);
      case 2: return force_on_cs<2>(cs, view, plan, p, out);
      case 3: return force_on_cs<3>(cs, view, plan, p, out);
      default: break;
    }
  }
  force_on_generic(kernel, view, plan, p, out);
}

inline void force_vjp_at(const Kernel& kernel, const ParticleView& view, const ForcePlan& plan,
                         const double* cot, std::size_t p, double* gpos, double* gvel) noexcept {
  if (kernel.family() == KernelFamily::cucker_smale) {
    const CuckerSmaleEval cs(kernel.cucker_smale_params());
    switch (view.dim) {
      case 1: return force_vjp_at_cs<1>(cs, view, plan, cot, p, gpos, gvel);
      case 2: return force_vjp_at_cs<2>(cs, view, plan, cot, p, gpos, gvel);
      case 3: return force_vjp_at_cs<3>(cs, view, plan, cot, p, gpos, gvel);
      default: break;
    }
  }
  force_vjp_at_generic(kernel, view, plan, cot, p, gpos, gvel);
}

void interaction_forces_serial(const Kernel& kernel, const ParticleView& view, const ForcePlan& plan,
                               std::span<double> out);
void interaction_forces_parallel(const Kernel& kernel, const ParticleView& view, const ForcePlan& plan,
                                 std::span<double> out);
void interaction_forces_vjp_serial(const Kernel& kernel, const ParticleView& view, const ForcePlan& plan,
                                   std::span<const double> cot, std::span<double> grad_pos,
                                   std::span<double> grad_vel);
void interaction_forces_vjp_parallel(const Kernel& kernel, const ParticleView& view, const ForcePlan& plan,
                                     std::span<const double> cot, std::span<double> grad_pos,
                                     std::span<double> grad_vel);

}  // namespace mfsc::detail
