#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "mfsc/forces.hpp"
#include "mfsc/kernels.hpp"
#include "mfsc/measures.hpp"
#include "mfsc/numeric.hpp"
#include "mfsc/random.hpp"
#include "mfsc/wasserstein.hpp"

using namespace mfsc;

namespace {

struct Particles {
  std::size_t m = 0, n = 0;
  int d = 1;
  std::vector<double> pos, vel;
  ParticleView view() const { return {m, n, d, pos.data(), vel.data()}; }
};

Particles random_particles(std::uint64_t seed, std::size_t m, std::size_t n, int d, double spread = 2.0) {
  StreamRng rng(seed, 0);
  Particles p{m, n, d, std::vector<double>((m + n) * d), std::vector<double>((m + n) * d)};
  for (auto& x : p.pos) x = rng.uniform(-spread, spread);
  for (auto& x : p.vel) x = rng.uniform(-spread, spread);
  return p;
}

// Plain double loop over both populations.
std::vector<double> naive_forces(const Kernel& k, const Particles& p) {
  const int d = p.d;
  std::vector<double> out(p.pos.size(), 0.0);
  for (std::size_t i = 0; i < p.m + p.n; ++i) {
    for (std::size_t j = 0; j < p.m + p.n; ++j) {
      std::vector<double> dx(d), dv(d);
      for (int c = 0; c < d; ++c) {
        dx[c] = p.pos[i * d + c] - p.pos[j * d + c];
        dv[c] = p.vel[i * d + c] - p.vel[j * d + c];
      }
      const auto h = eval_kernel(k, dx, dv);
      const double w = j < p.m ? 1.0 / static_cast<double>(p.m) : 1.0 / static_cast<double>(p.n);
      for (int c = 0; c < d; ++c) out[i * d + c] += w * h[c];
    }
  }
  return out;
}

std::vector<Kernel> kernels(int d) {
  return {Kernel::cucker_smale(d, {}), Kernel::cucker_smale(d, {2.0, 0.5, 1.0, -1.0}),
          Kernel::repulsion_attraction(d, {0.05, 1.0, 0.05}), Kernel::zero(d)};
}

}  // namespace

TEST_CASE("forces match the naive double sum") {
  for (int d : {1, 2, 3}) {
    for (const Kernel& k : kernels(d)) {
      for (std::size_t n : {0u, 1u, 7u, 40u}) {
        const auto p = random_particles(10 + n, 3, n, d);
        std::vector<double> out(p.pos.size());
        interaction_forces(k, p.view(), out, Backend::serial);
        const auto ref = naive_forces(k, p);
        for (std::size_t q = 0; q < out.size(); ++q) CHECK(out[q] == doctest::Approx(ref[q]).epsilon(1e-12).scale(1.0));
      }
    }
  }
}

TEST_CASE("two-body alignment hand sum") {
  // m = 1, N = 1, d = 1, a = 1: each particle sees -(v_p - v_q) once.
  const Kernel k = Kernel::cucker_smale(1, {1.0, 1.0, 0.0, -1.0});
  Particles p{1, 1, 1, {0.0, 0.0}, {1.0, -1.0}};
  std::vector<double> out(2);
  interaction_forces(k, p.view(), out);
  CHECK(out[0] == -2.0);
  CHECK(out[1] == 2.0);
}

TEST_CASE("serial and parallel backends agree bitwise") {
  for (int threads : {1, 2, 3}) {
    set_thread_count(threads);
    for (const Kernel& k : kernels(2)) {
      const auto p = random_particles(77, 2, 300, 2);
      std::vector<double> a(p.pos.size()), b(p.pos.size());
      interaction_forces(k, p.view(), a, Backend::serial);
      interaction_forces(k, p.view(), b, Backend::parallel);
      CHECK(a == b);

      std::vector<double> cot(p.pos.size());
      StreamRng rng(5, 0);
      for (auto& c : cot) c = rng.uniform(-1, 1);
      std::vector<double> gp1(p.pos.size(), 0.0), gv1(p.pos.size(), 0.0), gp2 = gp1, gv2 = gv1;
      interaction_forces_vjp(k, p.view(), cot, gp1, gv1, Backend::serial);
      interaction_forces_vjp(k, p.view(), cot, gp2, gv2, Backend::parallel);
      CHECK(gp1 == gp2);
      CHECK(gv1 == gv2);
    }
  }
  set_thread_count(1);
}

TEST_CASE("relabeling followers permutes forces bitwise") {
  const Kernel k = Kernel::cucker_smale(2, {});
  const auto p = random_particles(88, 2, 25, 2);
  std::vector<std::size_t> perm(25);
  std::iota(perm.begin(), perm.end(), 0);
  StreamRng rng(1, 1);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.uniform() * i)]);
  Particles q = p;
  for (std::size_t i = 0; i < 25; ++i) {
    for (int c = 0; c < 2; ++c) {
      q.pos[(2 + i) * 2 + c] = p.pos[(2 + perm[i]) * 2 + c];
      q.vel[(2 + i) * 2 + c] = p.vel[(2 + perm[i]) * 2 + c];
    }
  }
  std::vector<double> fp(p.pos.size()), fq(p.pos.size());
  interaction_forces(k, p.view(), fp);
  interaction_forces(k, q.view(), fq);
  for (int c = 0; c < 4; ++c) CHECK(fp[c] == fq[c]);
  for (std::size_t i = 0; i < 25; ++i) {
    for (int c = 0; c < 2; ++c) CHECK(fq[(2 + i) * 2 + c] == fp[(2 + perm[i]) * 2 + c]);
  }
}

TEST_CASE("vjp matches central differences") {
  for (const Kernel& k : kernels(2)) {
    const auto p = random_particles(99, 2, 6, 2, 1.5);
    std::vector<double> cot(p.pos.size());
    StreamRng rng(9, 0);
    for (auto& c : cot) c = rng.uniform(-1, 1);
    std::vector<double> gp(p.pos.size(), 0.0), gv(p.pos.size(), 0.0);
    interaction_forces_vjp(k, p.view(), cot, gp, gv);
    auto objective = [&](const Particles& q) {
      std::vector<double> f(q.pos.size());
      interaction_forces(k, q.view(), f, Backend::serial);
      return std::inner_product(f.begin(), f.end(), cot.begin(), 0.0);
    };
    const double eps = 1e-6;
    for (std::size_t s = 0; s < p.pos.size(); ++s) {
      for (int which = 0; which < 2; ++which) {
        Particles hi = p, lo = p;
        (which == 0 ? hi.pos : hi.vel)[s] += eps;
        (which == 0 ? lo.pos : lo.vel)[s] -= eps;
        const double fd = (objective(hi) - objective(lo)) / (2 * eps);
        const double an = which == 0 ? gp[s] : gv[s];
        CHECK(an == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("convolution difference is bounded by Lip_H times W1") {
  const Kernel k = Kernel::cucker_smale(1, {1.0, 1.0, 0.5, -1.0});
  const double R = 2.0;
  // Query points and atoms lie in the ball of radius R, so differences lie in the 2R cube.
  const double lip = kernel_lipschitz_estimate(k, 2 * R, 20000, 3);
  for (int inst = 0; inst < 30; ++inst) {
    StreamRng rng(123, static_cast<std::uint64_t>(inst));
    auto draw = [&](std::size_t n) {
      std::vector<double> a(n * 2);
      for (auto& x : a) x = rng.uniform(-R / std::sqrt(2.0), R / std::sqrt(2.0));
      return EmpiricalMeasure::uniform(1, a);
    };
    const auto mu = draw(12), nu = draw(9);
    const double w = w1_distance(mu, nu);
    double worst = 0.0;
    for (double x = -1.0; x <= 1.0; x += 0.25) {
      for (double v = -1.0; v <= 1.0; v += 0.25) {
        const std::vector<double> q{x, v};
        worst = std::max(worst, std::fabs(convolve_empirical(k, mu, q)[0] - convolve_empirical(k, nu, q)[0]));
      }
    }
    CHECK(worst <= 1.05 * lip * w);
  }
}
