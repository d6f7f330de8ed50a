// Throughput comparison of the serial reference kernels against their
// OpenMP forms: matrix products, batched episode rollouts, and seed-parallel
// regret sweeps.

#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>

#include "curricula/env.hpp"
#include "curricula/matrix.hpp"
#include "curricula/parallel.hpp"
#include "curricula/regret.hpp"
#include "curricula/rollout.hpp"

using namespace curricula;

namespace {

double seconds(const std::function<void()>& fn, int reps) {
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count() / reps;
}

void bench_matmul() {
  Rng rng(1);
  std::printf("\n-- matmul (serial reference vs OpenMP) --\n");
  std::printf("%8s %12s %12s %9s %10s\n", "size", "serial_ms", "parallel_ms", "speedup",
              "gflops_par");
  for (int n : {64, 128, 256, 512}) {
    Matrix a(n, n), b(n, n), out;
    for (double& v : a.data) v = rng.uniform(-1, 1);
    for (double& v : b.data) v = rng.uniform(-1, 1);
    const int reps = n <= 128 ? 50 : 8;
    const double ts = seconds([&] { matmul_serial(a, b, out); }, reps);
    const double tp = seconds([&] { matmul_parallel(a, b, out); }, reps);
    const double flops = 2.0 * n * n * n;
    std::printf("%8d %12.3f %12.3f %9.2f %10.2f\n", n, ts * 1e3, tp * 1e3, ts / tp,
                flops / tp / 1e9);
  }
}

void bench_rollouts() {
  std::printf("\n-- episode collection (32 episodes, n=4 simple_spread) --\n");
  StudentConfig cfg;
  cfg.obs_dim = ParticleEnv::observation_dim(EnvFamily::kSimpleSpread, 8);
  StudentPolicy policy(cfg, 3);
  Rng rng(4);
  policy.randomize(rng, 0.3);
  const TaskSpec task{EnvFamily::kSimpleSpread, 4, 25, 0};
  const std::vector<int> allowed = {4};
  auto make_env = [&]() {
    return std::unique_ptr<RolloutEnv>(new ParticleEnv(task, PhysicsConfig{}, allowed));
  };
  RolloutOptions opt;
  opt.env_seed = 5;
  opt.policy_seed = 6;
  const double ts = seconds([&] { collect_episodes(make_env, policy, 32, opt, false); }, 3);
  const double tp = seconds([&] { collect_episodes(make_env, policy, 32, opt, true); }, 3);
  std::printf("serial %.1f ms   parallel %.1f ms   speedup %.2fx   (threads: %d)\n", ts * 1e3,
              tp * 1e3, ts / tp, max_threads());
}

void bench_regret_seeds() {
  std::printf("\n-- regret sweep (T=20000, 8 seeds, K=4) --\n");
  const auto instance = LipschitzBanditInstance::evenly_spaced(4, 1.0);
  const double ts = seconds(
      [&] { scaling_study(instance, {10000, 20000}, 8, UpdateRule::kImportanceWeighted, 7, false); },
      2);
  const double tp = seconds(
      [&] { scaling_study(instance, {10000, 20000}, 8, UpdateRule::kImportanceWeighted, 7, true); },
      2);
  std::printf("serial %.1f ms   parallel %.1f ms   speedup %.2fx\n", ts * 1e3, tp * 1e3, ts / tp);
}

}  // namespace

int main() {
  std::printf("hardware threads available to OpenMP: %d\n", max_threads());
  bench_matmul();
  bench_rollouts();
  bench_regret_seeds();
  return 0;
}
