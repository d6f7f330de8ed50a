#include "curricula/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace curricula {

void TrainConfig::validate() const {
  if (!(discount >= 0.0 && discount <= 1.0)) throw std::invalid_argument("TrainConfig: bad discount");
  if (!(clip > 0.0)) throw std::invalid_argument("TrainConfig: clip must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  if (sgd_iterations < 1) throw std::invalid_argument("TrainConfig: sgd_iterations must be >= 1");
}

GaeResult compute_returns_and_advantages(std::span<const double> rewards,
                                         std::span<const double> values,
                                         std::span<const std::pair<int, int>> segments,
                                         double gamma, double lambda) {
  if (rewards.size() != values.size())
    throw std::invalid_argument("compute_returns_and_advantages: array length mismatch");
  GaeResult out;
  out.raw_advantages.assign(rewards.size(), 0.0);
  out.returns.assign(rewards.size(), 0.0);

  for (const auto& [start, len] : segments) {
    if (start < 0 || len < 0 || static_cast<size_t>(start + len) > rewards.size())
      throw std::invalid_argument("compute_returns_and_advantages: bad segment");
    double gae = 0.0;
    for (int i = start + len - 1; i >= start; --i) {
      const double next_value = i == start + len - 1 ? 0.0 : values[i + 1];
      const double delta = rewards[i] + gamma * next_value - values[i];
      gae = delta + gamma * lambda * gae;
      out.raw_advantages[i] = gae;
      out.returns[i] = gae + values[i];
    }
  }

  out.advantages = out.raw_advantages;
  const size_t n = out.advantages.size();
  if (n > 0) {
    double mean = 0.0;
    for (double a : out.advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : out.advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / (std::sqrt(var) + 1e-8);
    for (double& a : out.advantages) a = (a - mean) * inv;
  }
  return out;
}

namespace {

std::vector<std::vector<int>> make_minibatches(int count, const TrainConfig& cfg, int rows_per_item,
                                               Rng& rng) {
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with the trainer's stream.
  for (int i = count - 1; i > 0; --i) {
    const int j = rng.uniform_int(i + 1);
    std::swap(order[i], order[j]);
  }
  const int rows = count * rows_per_item;
  const int target_rows = cfg.minibatch_size > 0
                              ? cfg.minibatch_size
                              : std::max(rows / 4, cfg.minibatch_floor);
  const int size = std::min(count, std::max(1, target_rows / rows_per_item));
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < count; start += size) {
    const int end = std::min(count, start + size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

struct LossAccumulator {
  double surrogate = 0.0, kl = 0.0, value_loss = 0.0, clip_fraction = 0.0;
  int evals = 0;
  void fold(double s, double k, double v, double c) {
    surrogate += s;
    kl += k;
    value_loss += v;
    clip_fraction += c;
    ++evals;
  }
  UpdateMetrics finish(double mean_return) const {
    UpdateMetrics m;
    const double d = std::max(1, evals);
    m.surrogate = surrogate / d;
    m.kl = kl / d;
    m.value_loss = value_loss / d;
    m.clip_fraction = clip_fraction / d;
    m.mean_return = mean_return;
    return m;
  }
};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void PpoTrainer::step_params(StudentPolicy& policy) {
  if (config_.adam)
    policy.params().adam_step(config_.learning_rate);
  else
    policy.params().sgd_step(config_.learning_rate);
}

UpdateMetrics PpoTrainer::update_low(StudentPolicy& policy, TrajectoryBatch& batch, Rng& rng) {
  if (batch.policy_version != policy.version())
    throw std::logic_error("update_low: batch was not collected under the current parameters");
  if (batch.consumed_low)
    throw std::logic_error("update_low: batch already consumed; collect new data first");
  batch.consumed_low = true;

  const LowRows& rows = batch.low;
  const int b = rows.rows();
  if (b == 0) throw std::invalid_argument("update_low: empty batch");

  const GaeResult gae = compute_returns_and_advantages(
      rows.rewards, rows.values, rows.segments, config_.discount, config_.gae_lambda);

  LossAccumulator acc;
  for (int iter = 0; iter < config_.sgd_iterations; ++iter) {
    for (const auto& mb : make_minibatches(b, config_, 1, rng)) {
      const int m = static_cast<int>(mb.size());
      Matrix in(m, rows.obs.cols + rows.skills.cols);
      Matrix old_lp(m, 1), adv(m, 1), ret(m, 1);
      Matrix old_full(m, rows.dist_info.cols), old_probs(m, rows.dist_info.cols);
      std::vector<int> actions(m);
      for (int i = 0; i < m; ++i) {
        const int r = mb[i];
        for (int d = 0; d < rows.obs.cols; ++d) in.at(i, d) = rows.obs.at(r, d);
        for (int d = 0; d < rows.skills.cols; ++d)
          in.at(i, rows.obs.cols + d) = rows.skills.at(r, d);
        actions[i] = rows.actions[r];
        old_lp.at(i, 0) = rows.log_probs[r];
        adv.at(i, 0) = gae.advantages[r];
        ret.at(i, 0) = gae.returns[r];
        for (int d = 0; d < rows.dist_info.cols; ++d) {
          old_full.at(i, d) = rows.dist_info.at(r, d);
          old_probs.at(i, d) = std::exp(rows.dist_info.at(r, d));
        }
      }

      Tape tape(&policy.params());
      const ValueId in_id = tape.constant(std::move(in));
      const auto heads = policy.low_forward(tape, in_id);
      const ValueId new_log_full = tape.log_softmax(heads.policy_out);
      const ValueId logp = tape.pick_per_row(new_log_full, actions);
      const ValueId ratio = tape.exp(tape.sub(logp, tape.constant(old_lp)));
      const ValueId adv_id = tape.constant(adv);
      const ValueId surr = tape.affine(
          tape.mean_all(tape.minimum(
              tape.hadamard(ratio, adv_id),
              tape.hadamard(tape.clamp(ratio, 1.0 - config_.clip, 1.0 + config_.clip), adv_id))),
          -1.0, 0.0);
      const ValueId kl = tape.mean_all(tape.sum_rows(tape.hadamard(
          tape.constant(old_probs), tape.sub(tape.constant(old_full), new_log_full))));
      const ValueId vdev = tape.clamp(tape.sub(heads.value, tape.constant(ret)),
                                      -config_.value_clip, config_.value_clip);
      const ValueId vloss = tape.mean_all(tape.hadamard(vdev, vdev));
      ValueId loss = tape.add(surr, tape.affine(kl, config_.kl_coefficient, 0.0));
      loss = tape.add(loss, vloss);
      if (config_.entropy_coefficient != 0.0) {
        const ValueId probs = tape.exp(new_log_full);
        const ValueId entropy =
            tape.affine(tape.mean_all(tape.sum_rows(tape.hadamard(probs, new_log_full))), -1.0, 0.0);
        loss = tape.add(loss, tape.affine(entropy, -config_.entropy_coefficient, 0.0));
      }

      double clipped = 0.0;
      const Matrix& ratio_val = tape.value(ratio);
      for (int i = 0; i < m; ++i)
        if (std::abs(ratio_val.at(i, 0) - 1.0) > config_.clip) clipped += 1.0;
      acc.fold(tape.value(surr).at(0, 0), tape.value(kl).at(0, 0), tape.value(vloss).at(0, 0),
               clipped / m);

      policy.params().zero_grads();
      tape.backward(loss);
      step_params(policy);
    }
  }
  return acc.finish(mean_of(batch.episode_returns));
}

UpdateMetrics PpoTrainer::update_high(StudentPolicy& policy, TrajectoryBatch& batch, Rng& rng) {
  if (batch.policy_version != policy.version())
    throw std::logic_error("update_high: batch was not collected under the current parameters");
  if (batch.consumed_high)
    throw std::logic_error("update_high: batch already consumed; collect new data first");
  batch.consumed_high = true;
  if (batch.groups.empty()) throw std::invalid_argument("update_high: empty batch");

  const bool discrete = policy.config().skill_mode == SkillMode::kDiscrete;
  const int d_skill = policy.config().d_skill;

  // Flatten per-(episode, agent) decision sequences for advantage estimation.
  std::vector<double> rewards, values;
  std::vector<std::pair<int, int>> segments;
  std::vector<std::pair<int, int>> flat_index;  // (group, row) per flat slot
  for (const auto& seg : batch.high_segments) {
    segments.emplace_back(static_cast<int>(flat_index.size()), static_cast<int>(seg.size()));
    for (const auto& [g, row] : seg) {
      rewards.push_back(batch.groups[g].rewards[row]);
      values.push_back(batch.groups[g].values[row]);
      flat_index.emplace_back(g, row);
    }
  }
  const GaeResult gae = compute_returns_and_advantages(rewards, values, segments,
                                                       config_.discount, config_.gae_lambda);
  // Scatter advantages/returns back onto (group, row).
  std::vector<std::vector<double>> adv_by_group(batch.groups.size()),
      ret_by_group(batch.groups.size());
  for (size_t g = 0; g < batch.groups.size(); ++g) {
    adv_by_group[g].assign(batch.groups[g].rewards.size(), 0.0);
    ret_by_group[g].assign(batch.groups[g].rewards.size(), 0.0);
  }
  for (size_t i = 0; i < flat_index.size(); ++i) {
    adv_by_group[flat_index[i].first][flat_index[i].second] = gae.advantages[i];
    ret_by_group[flat_index[i].first][flat_index[i].second] = gae.returns[i];
  }

  const int group_count = static_cast<int>(batch.groups.size());
  LossAccumulator acc;
  for (int iter = 0; iter < config_.sgd_iterations; ++iter) {
    for (const auto& mb : make_minibatches(group_count, config_, batch.n_agents, rng)) {
      Tape tape(&policy.params());
      ValueId sum_surr = -1, sum_kl = -1, sum_vloss = -1;
      int total_rows = 0;
      double clipped = 0.0;

      for (int gi : mb) {
        const DecisionGroup& group = batch.groups[gi];
        const int n = group.team_obs.rows;
        total_rows += n;
        const auto heads = policy.high_forward(tape, tape.constant(group.team_obs));

        Matrix adv(n, 1), ret(n, 1), old_lp(n, 1);
        for (int j = 0; j < n; ++j) {
          adv.at(j, 0) = adv_by_group[gi][j];
          ret.at(j, 0) = ret_by_group[gi][j];
          old_lp.at(j, 0) = group.log_probs[j];
        }

        ValueId logp, kl_rows;
        if (discrete) {
          const ValueId new_log_full = tape.log_softmax(heads.policy_out);
          logp = tape.pick_per_row(new_log_full, group.options);
          Matrix old_probs(n, d_skill);
          for (int j = 0; j < n; ++j)
            for (int d = 0; d < d_skill; ++d) old_probs.at(j, d) = std::exp(group.dist_info.at(j, d));
          Matrix old_full(n, d_skill);
          for (int j = 0; j < n; ++j)
            for (int d = 0; d < d_skill; ++d) old_full.at(j, d) = group.dist_info.at(j, d);
          kl_rows = tape.sum_rows(tape.hadamard(
              tape.constant(old_probs), tape.sub(tape.constant(old_full), new_log_full)));
        } else {
          // Diagonal Gaussian over the pre-squash sample; the tanh correction
          // is constant in the parameters and cancels from the ratio, but is
          // included so stored and recomputed log-probs agree.
          Matrix z = group.pre_squash;
          Matrix old_mean(n, d_skill), old_log_std(n, d_skill), squash_corr(n, 1);
          for (int j = 0; j < n; ++j) {
            double corr = 0.0;
            for (int d = 0; d < d_skill; ++d) {
              old_mean.at(j, d) = group.dist_info.at(j, d);
              old_log_std.at(j, d) = group.dist_info.at(j, d_skill + d);
              const double a = std::tanh(z.at(j, d));
              corr -= std::log(1.0 - a * a + 1e-6);
            }
            squash_corr.at(j, 0) = corr - d_skill * 0.9189385332046727;
          }
          const ValueId zc = tape.constant(z);
          const ValueId log_std =
              tape.add_row(tape.constant(Matrix::zeros(n, d_skill)), tape.param("high.log_std"));
          const ValueId inv_std = tape.exp(tape.affine(log_std, -1.0, 0.0));
          const ValueId u = tape.hadamard(tape.sub(zc, heads.policy_out), inv_std);
          const ValueId quad = tape.affine(tape.sum_rows(tape.hadamard(u, u)), -0.5, 0.0);
          logp = tape.add(tape.add(quad, tape.affine(tape.sum_rows(log_std), -1.0, 0.0)),
                          tape.constant(squash_corr));
          // KL(old || new) for diagonal Gaussians.
          const ValueId mean_diff = tape.sub(tape.constant(old_mean), heads.policy_out);
          const ValueId var_ratio = tape.hadamard(
              tape.exp(tape.affine(tape.add_row(tape.constant(Matrix::zeros(n, d_skill)),
                                                tape.param("high.log_std")),
                                   -2.0, 0.0)),
              tape.exp(tape.affine(tape.constant(old_log_std), 2.0, 0.0)));
          const ValueId scaled_diff =
              tape.hadamard(tape.hadamard(mean_diff, mean_diff),
                            tape.exp(tape.affine(log_std, -2.0, 0.0)));
          Matrix old_ls_sum(n, 1);
          for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int d = 0; d < d_skill; ++d) s += old_log_std.at(j, d);
            old_ls_sum.at(j, 0) = s;
          }
          kl_rows = tape.add(
              tape.affine(tape.sum_rows(tape.add(var_ratio, scaled_diff)), 0.5, -0.5 * d_skill),
              tape.sub(tape.sum_rows(log_std), tape.constant(old_ls_sum)));
        }

        const ValueId ratio = tape.exp(tape.sub(logp, tape.constant(old_lp)));
        const ValueId adv_id = tape.constant(adv);
        const ValueId surr_rows = tape.minimum(
            tape.hadamard(ratio, adv_id),
            tape.hadamard(tape.clamp(ratio, 1.0 - config_.clip, 1.0 + config_.clip), adv_id));
        const ValueId vdev = tape.clamp(tape.sub(heads.value, tape.constant(ret)),
                                        -config_.value_clip, config_.value_clip);
        const ValueId vloss_rows = tape.hadamard(vdev, vdev);

        const ValueId s = tape.sum_all(surr_rows);
        const ValueId k = tape.sum_all(kl_rows);
        const ValueId v = tape.sum_all(vloss_rows);
        sum_surr = sum_surr < 0 ? s : tape.add(sum_surr, s);
        sum_kl = sum_kl < 0 ? k : tape.add(sum_kl, k);
        sum_vloss = sum_vloss < 0 ? v : tape.add(sum_vloss, v);

        const Matrix& ratio_val = tape.value(ratio);
        for (int j = 0; j < n; ++j)
          if (std::abs(ratio_val.at(j, 0) - 1.0) > config_.clip) clipped += 1.0;
      }

      const double inv = 1.0 / total_rows;
      const ValueId surr = tape.affine(sum_surr, -inv, 0.0);
      const ValueId kl = tape.affine(sum_kl, inv, 0.0);
      const ValueId vloss = tape.affine(sum_vloss, inv, 0.0);
      ValueId loss = tape.add(tape.add(surr, tape.affine(kl, config_.kl_coefficient, 0.0)), vloss);

      acc.fold(tape.value(surr).at(0, 0), tape.value(kl).at(0, 0), tape.value(vloss).at(0, 0),
               clipped / total_rows);
      policy.params().zero_grads();
      tape.backward(loss);
      step_params(policy);
    }
  }
  return acc.finish(mean_of(batch.episode_returns));
}

std::pair<UpdateMetrics, UpdateMetrics> PpoTrainer::update(StudentPolicy& policy,
                                                           TrajectoryBatch& batch, Rng& rng) {
  UpdateMetrics low = update_low(policy, batch, rng);
  UpdateMetrics high = update_high(policy, batch, rng);
  policy.bump_version();
  return {low, high};
}

}  // namespace curricula
