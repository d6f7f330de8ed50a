#include "curricula/regret.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "curricula/parallel.hpp"

namespace curricula {

LipschitzBanditInstance LipschitzBanditInstance::evenly_spaced(int arms, double lipschitz) {
  if (arms < 1) throw std::invalid_argument("LipschitzBanditInstance: need at least one arm");
  LipschitzBanditInstance inst;
  inst.arm_count = arms;
  inst.lipschitz = lipschitz;
  for (int i = 0; i < arms; ++i) inst.anchors.push_back((i + 0.5) / arms);
  inst.verify_lipschitz();
  return inst;
}

LipschitzBanditInstance LipschitzBanditInstance::random_anchors(int arms, double lipschitz,
                                                                Rng& rng) {
  if (arms < 1) throw std::invalid_argument("LipschitzBanditInstance: need at least one arm");
  LipschitzBanditInstance inst;
  inst.arm_count = arms;
  inst.lipschitz = lipschitz;
  for (int i = 0; i < arms; ++i) inst.anchors.push_back(rng.uniform());
  inst.verify_lipschitz();
  return inst;
}

double LipschitzBanditInstance::mean_reward(int arm, double x) const {
  return std::max(0.0, 1.0 - lipschitz * std::abs(x - anchors[arm]));
}

int LipschitzBanditInstance::best_arm(double x) const {
  int best = 0;
  for (int a = 1; a < arm_count; ++a)
    if (mean_reward(a, x) > mean_reward(best, x)) best = a;
  return best;
}

void LipschitzBanditInstance::verify_lipschitz(int grid_points) const {
  const double step = 1.0 / (grid_points - 1);
  for (int a = 0; a < arm_count; ++a) {
    double prev = mean_reward(a, 0.0);
    for (int i = 1; i < grid_points; ++i) {
      const double x = i * step;
      const double cur = mean_reward(a, x);
      if (std::abs(cur - prev) > lipschitz * step + 1e-12)
        throw std::runtime_error("LipschitzBanditInstance: Lipschitz bound violated");
      if (cur < 0.0 || cur > 1.0)
        throw std::runtime_error("LipschitzBanditInstance: reward outside [0,1]");
      prev = cur;
    }
  }
}

std::vector<int> discretized_best_response(const LipschitzBanditInstance& instance,
                                           const MeshGrid& grid) {
  std::vector<int> table(grid.point_count());
  for (int i = 0; i < grid.point_count(); ++i) table[i] = instance.best_arm(grid.points[i]);
  return table;
}

int discretized_best_response_at(const LipschitzBanditInstance& instance, const MeshGrid& grid,
                                 double x) {
  return instance.best_arm(grid.points[mesh_index(x, grid)]);
}

RegretTrace run_mesh_exp3(const LipschitzBanditInstance& instance, long horizon, double epsilon,
                          UpdateRule rule, uint64_t seed, double alpha_override) {
  const MeshGrid grid(epsilon);
  const std::vector<int> disc_best = discretized_best_response(instance, grid);
  const double alpha =
      alpha_override > 0.0
          ? alpha_override
          : tuned_alpha(instance.arm_count, std::max<long>(2, horizon / grid.point_count()));
  ContextualRouter router(instance.arm_count, alpha, rule);
  Rng rng(seed);

  RegretTrace trace;
  trace.horizon = horizon;
  trace.epsilon = epsilon;
  trace.realized.reserve(horizon);
  trace.best_response.reserve(horizon);
  trace.discretized_best.reserve(horizon);

  for (long t = 0; t < horizon; ++t) {
    const double x = rng.uniform();
    const int cell = mesh_index(x, grid);
    const auto act = router.act(cell, rng);
    const double mean = instance.mean_reward(act.arm, x);
    const double noisy = rng.uniform() < mean ? 1.0 : 0.0;
    router.update(cell, act.arm, noisy, act.distribution.probabilities[act.arm]);

    trace.realized.push_back(mean);
    trace.best_response.push_back(instance.mean_reward(instance.best_arm(x), x));
    trace.discretized_best.push_back(instance.mean_reward(disc_best[cell], x));
  }
  return trace;
}

RegretSummary regret_and_de(const RegretTrace& trace) {
  if (trace.realized.size() != trace.best_response.size() ||
      trace.realized.size() != trace.discretized_best.size())
    throw std::invalid_argument("regret_and_de: trace columns misaligned");
  RegretSummary s;
  for (size_t t = 0; t < trace.realized.size(); ++t) {
    s.exp3_regret += trace.discretized_best[t] - trace.realized[t];
    s.discretization_error += trace.best_response[t] - trace.discretized_best[t];
    s.total_regret += trace.best_response[t] - trace.realized[t];
  }
  return s;
}

ScalingStudy scaling_study(const LipschitzBanditInstance& instance,
                           const std::vector<long>& horizons, int seeds, UpdateRule rule,
                           uint64_t seed_base, bool parallel) {
  if (horizons.size() < 2) throw std::invalid_argument("scaling_study: need at least two horizons");
  ScalingStudy study;
  const Rng root(seed_base);
  for (size_t hi = 0; hi < horizons.size(); ++hi) {
    ScalingRow row;
    row.horizon = horizons[hi];
    row.epsilon = epsilon_star(instance.arm_count, horizons[hi], instance.lipschitz);
    row.per_seed.assign(seeds, 0.0);
    parallel_for(seeds, parallel, [&](int s) {
      const uint64_t seed = root.fork(hi * 100003 + s).seed();
      const RegretTrace trace = run_mesh_exp3(instance, row.horizon, row.epsilon, rule, seed);
      row.per_seed[s] = regret_and_de(trace).total_regret;
    });
    double mean = 0.0;
    for (double r : row.per_seed) mean += r;
    mean /= seeds;
    double var = 0.0;
    for (double r : row.per_seed) var += (r - mean) * (r - mean);
    row.mean_regret = mean;
    row.sd_regret = seeds > 1 ? std::sqrt(var / (seeds - 1)) : 0.0;
    study.rows.push_back(std::move(row));
  }

  // Least-squares slope of log(mean regret) on log(T).
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const int n = static_cast<int>(study.rows.size());
  for (const auto& row : study.rows) {
    const double x = std::log(static_cast<double>(row.horizon));
    const double y = std::log(std::max(1e-12, row.mean_regret));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  study.loglog_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return study;
}

std::vector<std::vector<double>> run_finite_context_exp3(
    const std::vector<std::vector<double>>& context_arm_means, long horizon, UpdateRule rule,
    uint64_t seed, double alpha_override) {
  const int contexts = static_cast<int>(context_arm_means.size());
  if (contexts < 1) throw std::invalid_argument("run_finite_context_exp3: no contexts");
  const int arms = static_cast<int>(context_arm_means[0].size());
  for (const auto& means : context_arm_means)
    if (static_cast<int>(means.size()) != arms)
      throw std::invalid_argument("run_finite_context_exp3: ragged arm means");

  const double alpha = alpha_override > 0.0
                           ? alpha_override
                           : tuned_alpha(arms, std::max<long>(2, horizon / contexts));
  ContextualRouter router(arms, alpha, rule);
  Rng rng(seed);

  std::vector<std::vector<double>> curves(contexts);
  std::vector<double> best(contexts);
  for (int c = 0; c < contexts; ++c)
    best[c] = *std::max_element(context_arm_means[c].begin(), context_arm_means[c].end());
  std::vector<double> cum(contexts, 0.0);

  for (long t = 0; t < horizon; ++t) {
    const int c = rng.uniform_int(contexts);
    const auto act = router.act(c, rng);
    const double mean = context_arm_means[c][act.arm];
    const double noisy = rng.uniform() < mean ? 1.0 : 0.0;
    router.update(c, act.arm, noisy, act.distribution.probabilities[act.arm]);
    cum[c] += best[c] - mean;
    curves[c].push_back(cum[c]);
  }
  return curves;
}

}  // namespace curricula
