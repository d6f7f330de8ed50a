#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "curricula/rollout_env.hpp"
#include "curricula/student.hpp"

namespace curricula {

// One high-level decision point: the full team context needed to recompute
// the attention pass during training, plus the per-agent outcomes.
struct DecisionGroup {
  int episode = 0;
  int t = 0;  // environment step the decision was taken at
  Matrix team_obs;      // n x obs_dim
  Matrix messages;      // n x d_m, channel output at decision time
  std::vector<int> options;             // discrete skill indices (-1 continuous)
  Matrix skill_values;                  // n x d_skill
  Matrix pre_squash;                    // n x d_skill (continuous mode)
  std::vector<double> log_probs;        // per agent
  std::vector<double> values;           // per agent
  std::vector<double> rewards;          // per agent, summed over the interval
  Matrix dist_info;                     // per agent: old log-probs or (mean, log-std)
};

// Flat low-level rows ordered (episode, agent, step) so each (episode, agent)
// run is one contiguous segment.
struct LowRows {
  Matrix obs;        // B x obs_dim
  Matrix skills;     // B x d_skill
  std::vector<int> actions;
  std::vector<double> rewards, values, log_probs;
  Matrix dist_info;  // B x n_actions old log-probs
  std::vector<std::pair<int, int>> segments;  // (start, length)
  int rows() const { return obs.rows; }
};

// Collected experience at both hierarchy levels for one training phase.
struct TrajectoryBatch {
  LowRows low;
  std::vector<DecisionGroup> groups;
  // High-level segments: for each (episode, agent), the (group index, row)
  // pairs in decision order.
  std::vector<std::vector<std::pair<int, int>>> high_segments;

  int n_agents = 0;
  int episode_count = 0;
  long policy_version = 0;
  bool consumed_low = false;
  bool consumed_high = false;

  std::vector<double> episode_returns;             // undiscounted env-reward sums
  std::vector<double> episode_discounted_returns;  // gamma-discounted
  std::vector<double> episode_coverages;           // final-step coverage
  std::vector<int> episode_lengths;
};

struct RolloutOptions {
  bool greedy = false;
  bool record = true;
  double discount = 0.99;
  uint64_t env_seed = 0;
  uint64_t policy_seed = 0;
  // Debug hook invoked after every environment step.
  std::function<void(int t, const std::vector<int>& actions, const StepOutcome&)> step_hook;
};

struct EpisodeResult {
  double discounted_return = 0.0;
  double undiscounted_return = 0.0;
  double final_coverage = 0.0;
  int length = 0;
  // Recorded trajectories (empty when record is off).
  std::vector<DecisionGroup> groups;
  Matrix low_obs;
  Matrix low_skills;
  std::vector<int> low_actions;
  std::vector<double> low_rewards, low_values, low_log_probs;
  Matrix low_dist_info;
  std::vector<double> env_rewards;  // shared reward per step
};

// Runs one episode of the fixed-interval hierarchy: every `interval` steps
// messages are encoded and exchanged through the channel and the high level
// picks a skill held fixed until the next decision; the low level acts every
// step. Each high-level transition's reward is the sum of the shared
// environment rewards over its interval.
EpisodeResult run_hierarchical_episode(RolloutEnv& env, const StudentPolicy& policy,
                                       const RolloutOptions& options);

// Runs `episodes` seeded episodes (optionally across OpenMP workers; each
// episode owns its environment instance and random streams, so results are
// identical for any worker count) and assembles the training batch.
TrajectoryBatch collect_episodes(const std::function<std::unique_ptr<RolloutEnv>()>& make_env,
                                 const StudentPolicy& policy, int episodes,
                                 const RolloutOptions& base_options, bool parallel);

// Convenience wrapper turning an EpisodeResult list into a TrajectoryBatch.
TrajectoryBatch assemble_batch(std::vector<EpisodeResult> episodes, const StudentPolicy& policy);

}  // namespace curricula
