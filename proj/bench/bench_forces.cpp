// Serial reference loop vs the OpenMP loop for the interaction forces and
// their reverse-mode product.

#include <benchmark/benchmark.h>

#include <vector>

#include "mfsc/forces.hpp"
#include "mfsc/kernels.hpp"
#include "mfsc/random.hpp"

namespace {

struct Cloud {
  std::size_t m = 2, n;
  int d = 2;
  std::vector<double> pos, vel;

  explicit Cloud(std::size_t followers) : n(followers), pos((m + n) * d), vel((m + n) * d) {
    mfsc::StreamRng rng(7, 0);
    for (auto& x : pos) x = rng.uniform(-2.0, 2.0);
    for (auto& v : vel) v = rng.uniform(-1.0, 1.0);
  }
  mfsc::ParticleView view() const { return {m, n, d, pos.data(), vel.data()}; }
};

const mfsc::Kernel& kernel() {
  static const mfsc::Kernel k = mfsc::Kernel::cucker_smale(2, mfsc::CuckerSmaleParams{});
  return k;
}

void forces(benchmark::State& state, mfsc::Backend backend) {
  const Cloud c(static_cast<std::size_t>(state.range(0)));
  std::vector<double> out(c.pos.size());
  for (auto _ : state) {
    mfsc::interaction_forces(kernel(), c.view(), out, backend);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>((c.m + c.n) * (c.m + c.n)));
}

void forces_vjp(benchmark::State& state, mfsc::Backend backend) {
  const Cloud c(static_cast<std::size_t>(state.range(0)));
  std::vector<double> cot(c.pos.size(), 1.0), gp(c.pos.size()), gv(c.pos.size());
  for (auto _ : state) {
    mfsc::interaction_forces_vjp(kernel(), c.view(), cot, gp, gv, backend);
    benchmark::DoNotOptimize(gp.data());
  }
}

void BM_ForcesSerial(benchmark::State& s) { forces(s, mfsc::Backend::serial); }
void BM_ForcesParallel(benchmark::State& s) { forces(s, mfsc::Backend::parallel); }
void BM_VjpSerial(benchmark::State& s) { forces_vjp(s, mfsc::Backend::serial); }
void BM_VjpParallel(benchmark::State& s) { forces_vjp(s, mfsc::Backend::parallel); }

}  // namespace

BENCHMARK(BM_ForcesSerial)->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK(BM_ForcesParallel)->RangeMultiplier(4)->Range(64, 4096);
BENCHMARK(BM_VjpSerial)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_VjpParallel)->RangeMultiplier(4)->Range(64, 1024);

BENCHMARK_MAIN();
