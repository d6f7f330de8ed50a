#pragma once

#include <cstdint>
#include <vector>

#include "curricula/bandit.hpp"

namespace curricula {

// Synthetic Lipschitz contextual bandit with known reward oracles. The
// default family is piecewise-linear tents r_arm(x) = max(0, 1 - L|x - c|)
// with per-arm anchors c, so the Lipschitz constant is exact and the best
// response has closed form. Observations are Bernoulli draws of the mean.
struct LipschitzBanditInstance {
  int arm_count = 0;
  double lipschitz = 1.0;
  std::vector<double> anchors;

  static LipschitzBanditInstance evenly_spaced(int arms, double lipschitz);
  static LipschitzBanditInstance random_anchors(int arms, double lipschitz, Rng& rng);

  double mean_reward(int arm, double x) const;
  int best_arm(double x) const;  // ties to the lowest arm index

  // Checks the Lipschitz bound numerically over consecutive points of a fine
  // grid for every arm; throws if violated. Called by the factories.
  void verify_lipschitz(int grid_points = 10001) const;
};

struct RegretTrace {
  long horizon = 0;
  double epsilon = 1.0;
  // True per-round means (regret is measured in expectations, not draws).
  std::vector<double> realized;
  std::vector<double> best_response;
  std::vector<double> discretized_best;
};

// Best arm at the nearest mesh point, per mesh point (the discretized best
// response is constant over each point's cell).
std::vector<int> discretized_best_response(const LipschitzBanditInstance& instance,
                                           const MeshGrid& grid);
int discretized_best_response_at(const LipschitzBanditInstance& instance, const MeshGrid& grid,
                                 double x);

// Runs mesh-Exp3 for T rounds: each round draws a uniform context, routes it
// through a per-mesh-point Exp3 instance, observes a Bernoulli reward of the
// chosen arm's true mean at the raw context, and updates. alpha_override <= 0
// selects the classical tuning with the per-cell horizon T / point_count.
RegretTrace run_mesh_exp3(const LipschitzBanditInstance& instance, long horizon, double epsilon,
                          UpdateRule rule, uint64_t seed, double alpha_override = 0.0);

struct RegretSummary {
  double exp3_regret = 0.0;          // R_S: discretized best minus realized
  double discretization_error = 0.0; // DE: best response minus discretized best
  double total_regret = 0.0;         // R: best response minus realized
};
RegretSummary regret_and_de(const RegretTrace& trace);

struct ScalingRow {
  long horizon = 0;
  double epsilon = 0.0;
  double mean_regret = 0.0;
  double sd_regret = 0.0;
  std::vector<double> per_seed;
};
struct ScalingStudy {
  std::vector<ScalingRow> rows;
  double loglog_slope = 0.0;
};

// Mean +/- sd regret per horizon (each with its own epsilon*) over seeded
// independent runs, plus the least-squares log-log slope of mean regret
// against the horizon. Seeds run in parallel; each owns its random stream.
ScalingStudy scaling_study(const LipschitzBanditInstance& instance,
                           const std::vector<long>& horizons, int seeds, UpdateRule rule,
                           uint64_t seed_base, bool parallel = true);

// Finite-context harness: one Exp3 per context id over Bernoulli arms with
// per-context means. Returns the cumulative pseudo-regret curve per context.
std::vector<std::vector<double>> run_finite_context_exp3(
    const std::vector<std::vector<double>>& context_arm_means, long horizon, UpdateRule rule,
    uint64_t seed, double alpha_override = 0.0);

}  // namespace curricula
