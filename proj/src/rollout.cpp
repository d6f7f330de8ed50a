#include "curricula/rollout.hpp"

#include <memory>
#include <stdexcept>

#include "curricula/parallel.hpp"

namespace curricula {

EpisodeResult run_hierarchical_episode(RolloutEnv& env, const StudentPolicy& policy,
                                       const RolloutOptions& options) {
  const StudentConfig& cfg = policy.config();
  if (env.obs_dim() != cfg.obs_dim)
    throw std::invalid_argument("run_hierarchical_episode: observation width mismatch");
  const int n = env.agent_count();
  const int interval = cfg.interval;
  const int cap = env.max_steps();

  Rng policy_rng = Rng(options.policy_seed);
  Matrix obs = env.reset(options.env_seed);

  EpisodeResult res;
  if (options.record) {
    res.low_obs = Matrix(cap * n, cfg.obs_dim);
    res.low_skills = Matrix(cap * n, cfg.d_skill);
    res.low_dist_info = Matrix(cap * n, cfg.n_actions);
  }

  std::vector<SkillAction> skills(n);
  int active_group = -1;  // index into res.groups whose interval is running
  double discount_pow = 1.0;
  bool done = false;

  for (int t = 0; t < cap && !done; ++t) {
    if (t % interval == 0) {
      // High-level decision: exchange messages, pick skills for the interval.
      Matrix messages = policy.channel(policy.encode_all(obs));
      DecisionGroup group;
      group.t = t;
      group.team_obs = obs;
      group.messages = messages;
      group.options.resize(n);
      group.skill_values = Matrix(n, cfg.d_skill);
      group.pre_squash = Matrix(n, cfg.d_skill);
      group.log_probs.resize(n);
      group.values.resize(n);
      group.rewards.assign(n, 0.0);
      group.dist_info =
          Matrix(n, cfg.skill_mode == SkillMode::kDiscrete ? cfg.d_skill : 2 * cfg.d_skill);
      for (int j = 0; j < n; ++j) {
        std::span<const double> obs_row(&obs.data[static_cast<size_t>(j) * obs.cols], obs.cols);
        std::span<const double> msg_row(&messages.data[static_cast<size_t>(j) * messages.cols],
                                        messages.cols);
        auto high = policy.high_step(obs_row, msg_row, policy_rng, options.greedy);
        skills[j] = high.skill;
        group.options[j] = high.skill.option;
        for (int d = 0; d < cfg.d_skill; ++d) {
          group.skill_values.at(j, d) = high.skill.value[d];
          if (cfg.skill_mode == SkillMode::kContinuous)
            group.pre_squash.at(j, d) = high.skill.pre_squash[d];
        }
        group.log_probs[j] = high.log_prob;
        group.values[j] = high.value;
        for (size_t d = 0; d < high.dist_info.size(); ++d) group.dist_info.at(j, d) = high.dist_info[d];
      }
      if (options.record) {
        res.groups.push_back(std::move(group));
        active_group = static_cast<int>(res.groups.size()) - 1;
      }
    }

    std::vector<int> actions(n);
    const int row_base = res.length * n;
    for (int j = 0; j < n; ++j) {
      std::span<const double> obs_row(&obs.data[static_cast<size_t>(j) * obs.cols], obs.cols);
      auto low = policy.low_step(obs_row, skills[j], policy_rng, options.greedy);
      actions[j] = low.action;
      if (options.record) {
        const int row = row_base + j;
        for (int d = 0; d < cfg.obs_dim; ++d) res.low_obs.at(row, d) = obs.at(j, d);
        for (int d = 0; d < cfg.d_skill; ++d) res.low_skills.at(row, d) = skills[j].value[d];
        res.low_actions.push_back(low.action);
        res.low_values.push_back(low.value);
        res.low_log_probs.push_back(low.log_prob);
        for (int d = 0; d < cfg.n_actions; ++d) res.low_dist_info.at(row, d) = low.log_probs[d];
      }
    }

    StepOutcome outcome;
    try {
      outcome = env.step(actions);
    } catch (const std::exception& e) {
      throw std::runtime_error("environment fault at step " + std::to_string(t) + ": " + e.what());
    }

    if (options.record) {
      for (int j = 0; j < n; ++j) res.low_rewards.push_back(outcome.shared_reward);
      for (int j = 0; j < n; ++j) res.groups[active_group].rewards[j] += outcome.shared_reward;
      res.env_rewards.push_back(outcome.shared_reward);
    }
    if (options.step_hook) options.step_hook(t, actions, outcome);
    res.undiscounted_return += outcome.shared_reward;
    res.discounted_return += discount_pow * outcome.shared_reward;
    discount_pow *= options.discount;
    res.final_coverage = outcome.coverage;
    obs = std::move(outcome.observations);
    done = outcome.done;
    ++res.length;
  }

  if (options.record) {
    // Trim preallocated low-level storage to the realized episode length.
    const int rows = res.length * n;
    auto trim = [&](Matrix& m) {
      m.data.resize(static_cast<size_t>(rows) * m.cols);
      m.rows = rows;
    };
    trim(res.low_obs);
    trim(res.low_skills);
    trim(res.low_dist_info);
  }
  return res;
}

TrajectoryBatch assemble_batch(std::vector<EpisodeResult> episodes, const StudentPolicy& policy) {
  const StudentConfig& cfg = policy.config();
  TrajectoryBatch batch;
  batch.policy_version = policy.version();
  batch.episode_count = static_cast<int>(episodes.size());

  int total_rows = 0;
  int total_groups = 0;
  for (const auto& ep : episodes) {
    total_rows += ep.low_obs.rows;
    total_groups += static_cast<int>(ep.groups.size());
  }
  batch.low.obs = Matrix(total_rows, cfg.obs_dim);
  batch.low.skills = Matrix(total_rows, cfg.d_skill);
  batch.low.dist_info = Matrix(total_rows, cfg.n_actions);
  batch.low.actions.reserve(total_rows);
  batch.groups.reserve(total_groups);

  int cursor = 0;
  for (size_t e = 0; e < episodes.size(); ++e) {
    auto& ep = episodes[e];
    const int n = ep.low_obs.rows / std::max(1, ep.length);
    batch.n_agents = n;
    const int first_group = static_cast<int>(batch.groups.size());

    // Low rows reordered from (step, agent) to (agent, step) so that each
    // (episode, agent) stream is contiguous for advantage estimation.
    for (int j = 0; j < n; ++j) {
      batch.low.segments.emplace_back(cursor, ep.length);
      for (int t = 0; t < ep.length; ++t) {
        const int src = t * n + j;
        for (int d = 0; d < cfg.obs_dim; ++d) batch.low.obs.at(cursor, d) = ep.low_obs.at(src, d);
        for (int d = 0; d < cfg.d_skill; ++d)
          batch.low.skills.at(cursor, d) = ep.low_skills.at(src, d);
        for (int d = 0; d < cfg.n_actions; ++d)
          batch.low.dist_info.at(cursor, d) = ep.low_dist_info.at(src, d);
        batch.low.actions.push_back(ep.low_actions[src]);
        batch.low.rewards.push_back(ep.low_rewards[src]);
        batch.low.values.push_back(ep.low_values[src]);
        batch.low.log_probs.push_back(ep.low_log_probs[src]);
        ++cursor;
      }
    }

    for (auto& g : ep.groups) {
      g.episode = static_cast<int>(e);
      batch.groups.push_back(std::move(g));
    }
    for (int j = 0; j < n; ++j) {
      std::vector<std::pair<int, int>> seg;
      for (int g = first_group; g < static_cast<int>(batch.groups.size()); ++g)
        seg.emplace_back(g, j);
      batch.high_segments.push_back(std::move(seg));
    }

    batch.episode_returns.push_back(ep.undiscounted_return);
    batch.episode_discounted_returns.push_back(ep.discounted_return);
    batch.episode_coverages.push_back(ep.final_coverage);
    batch.episode_lengths.push_back(ep.length);
  }
  return batch;
}

TrajectoryBatch collect_episodes(const std::function<std::unique_ptr<RolloutEnv>()>& make_env,
                                 const StudentPolicy& policy, int episodes,
                                 const RolloutOptions& base_options, bool parallel) {
  std::vector<EpisodeResult> results(episodes);
  parallel_for(episodes, parallel, [&](int i) {
    std::unique_ptr<RolloutEnv> env = make_env();
    RolloutOptions opt = base_options;
    opt.env_seed = Rng(base_options.env_seed).fork(i).seed();
    opt.policy_seed = Rng(base_options.policy_seed).fork(i).seed();
    results[i] = run_hierarchical_episode(*env, policy, opt);
  });
  return assemble_batch(std::move(results), policy);
}

}  // namespace curricula
