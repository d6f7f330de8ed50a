#pragma once

#include <span>
#include <vector>

#include "curricula/rollout.hpp"
#include "curricula/student.hpp"

namespace curricula {

struct TrainConfig {
  double discount = 0.99;
  double gae_lambda = 1.0;
  double kl_coefficient = 0.5;
  int sgd_iterations = 10;
  double learning_rate = 1e-4;
  double entropy_coefficient = 0.0;
  double clip = 0.3;
  double value_clip = 10.0;
  int minibatch_floor = 32;
  int minibatch_size = 0;  // 0: one quarter of the batch (with the floor)
  bool adam = false;

  void validate() const;
};

struct GaeResult {
  std::vector<double> returns;         // value targets: raw advantage + value
  std::vector<double> advantages;      // normalized to zero mean / unit variance
  std::vector<double> raw_advantages;  // pre-normalization
};

// Generalized advantage estimation over independent segments, each a
// contiguous (start, length) run that terminates (bootstrap value 0).
GaeResult compute_returns_and_advantages(std::span<const double> rewards,
                                         std::span<const double> values,
                                         std::span<const std::pair<int, int>> segments,
                                         double gamma, double lambda);

struct UpdateMetrics {
  double surrogate = 0.0;
  double kl = 0.0;
  double value_loss = 0.0;
  double clip_fraction = 0.0;
  double mean_return = 0.0;
};

// Clipped-surrogate PPO with a fixed KL penalty and clipped value loss,
// applied at both hierarchy levels from their own sub-batches. The optimizer
// is plain gradient descent unless config.adam is set.
class PpoTrainer {
 public:
  explicit PpoTrainer(TrainConfig config) : config_(config) { config.validate(); }

  const TrainConfig& config() const { return config_; }

  // Updates one level. Batches must have been collected under the current
  // parameters and may be consumed once per level.
  UpdateMetrics update_low(StudentPolicy& policy, TrajectoryBatch& batch, Rng& rng);
  UpdateMetrics update_high(StudentPolicy& policy, TrajectoryBatch& batch, Rng& rng);

  // Full round update: low then high, then the policy version is bumped so
  // stale batches are rejected.
  std::pair<UpdateMetrics, UpdateMetrics> update(StudentPolicy& policy, TrajectoryBatch& batch,
                                                 Rng& rng);

 private:
  void step_params(StudentPolicy& policy);
  TrainConfig config_;
};

}  // namespace curricula
