#include "curricula/orchestrator.hpp"

#include <filesystem>
#include <iostream>

#include "curricula/parallel.hpp"

namespace curricula {

EvalResult evaluate_target(const StudentPolicy& policy, const TaskSpec& task,
                           const PhysicsConfig& physics, const std::vector<int>& allowed,
                           int episodes, double gamma, uint64_t seed_base) {
  if (episodes < 1) throw std::invalid_argument("evaluate_target: episodes must be >= 1");
  EvalResult res;
  res.per_episode_returns.resize(episodes);
  std::vector<double> coverages(episodes);
  const Rng root(seed_base);
  parallel_for(episodes, true, [&](int e) {
    ParticleEnv env = make_task(task, physics, allowed);
    RolloutOptions opt;
    opt.greedy = true;
    opt.record = false;
    opt.discount = gamma;
    opt.env_seed = root.fork(2 * e).seed();
    opt.policy_seed = root.fork(2 * e + 1).seed();
    const EpisodeResult ep = run_hierarchical_episode(env, policy, opt);
    res.per_episode_returns[e] = ep.discounted_return;
    coverages[e] = ep.final_coverage;
  });
  for (int e = 0; e < episodes; ++e) {
    res.mean_discounted_return += res.per_episode_returns[e];
    res.mean_coverage += coverages[e];
  }
  res.mean_discounted_return /= episodes;
  res.mean_coverage /= episodes;
  return res;
}

EvalResult evaluate_random_policy(const StudentConfig& student, const TaskSpec& task,
                                  const PhysicsConfig& physics, const std::vector<int>& allowed,
                                  int episodes, double gamma, uint64_t seed_base) {
  // Zero-initialized heads give uniform action sampling; stochastic rollouts
  // of a fresh policy are therefore a uniformly random baseline.
  StudentConfig cfg = student;
  cfg.obs_dim = ParticleEnv::observation_dim(task.family, physics.entity_slots);
  StudentPolicy random_policy(cfg, /*init_seed=*/0xabcdef);
  EvalResult res;
  res.per_episode_returns.resize(episodes);
  std::vector<double> coverages(episodes);
  const Rng root(seed_base);
  parallel_for(episodes, true, [&](int e) {
    ParticleEnv env = make_task(task, physics, allowed);
    RolloutOptions opt;
    opt.greedy = false;
    opt.record = false;
    opt.discount = gamma;
    opt.env_seed = root.fork(2 * e).seed();
    opt.policy_seed = root.fork(2 * e + 1).seed();
    const EpisodeResult ep = run_hierarchical_episode(env, random_policy, opt);
    res.per_episode_returns[e] = ep.discounted_return;
    coverages[e] = ep.final_coverage;
  });
  for (int e = 0; e < episodes; ++e) {
    res.mean_discounted_return += res.per_episode_returns[e];
    res.mean_coverage += coverages[e];
  }
  res.mean_discounted_return /= episodes;
  res.mean_coverage /= episodes;
  return res;
}

double estimate_objective(const std::vector<double>& training_distribution,
                          const std::vector<double>& target_distribution,
                          const std::vector<double>& value_estimates, bool* support_violation) {
  if (training_distribution.size() != target_distribution.size() ||
      training_distribution.size() != value_estimates.size())
    throw std::invalid_argument("estimate_objective: distribution sizes disagree");
  bool violation = false;
  double j = 0.0;
  for (size_t k = 0; k < training_distribution.size(); ++k) {
    const double q = training_distribution[k], p = target_distribution[k];
    if (p > 0.0 && q <= 0.0) {
      violation = true;
      j += p * value_estimates[k];  // direct form where the ratio is undefined
      continue;
    }
    if (q > 0.0) j += q * (p / q) * value_estimates[k];
  }
  if (violation)
    std::cerr << "warning: target distribution has mass outside the sampled support\n";
  if (support_violation) *support_violation = violation;
  return j;
}

const std::vector<std::string>& CurriculumRun::run_csv_header(int arms) {
  static std::vector<std::string> header;
  header = {"round", "cluster_id", "task_id"};
  for (int k = 0; k < arms; ++k) header.push_back("p_" + std::to_string(k));
  for (const char* col : {"raw_return", "norm_reward", "target_return", "target_coverage",
                          "J_hat"})
    header.push_back(col);
  return header;
}

CurriculumRun::CurriculumRun(ExperimentConfig config, const std::string& output_dir)
    : config_(std::move(config)),
      output_dir_(output_dir),
      trainer_(config_.trainer),
      rng_(config_.seed) {
  config_.validate();
  policy_ = std::make_unique<StudentPolicy>(config_.student, rng_.fork(1).seed());
  imitation_ = std::make_unique<ImitationModel>(config_.imitation, rng_.fork(2).seed());
  teacher_ = std::make_unique<Teacher>(config_.task_set(), config_.imitation.hidden,
                                       config_.teacher);
  value_estimates_.assign(teacher_->arm_count(), 0.0);

  if (!output_dir_.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(output_dir_);
    std::ofstream cfg_out(fs::path(output_dir_) / "config.json");
    cfg_out << experiment_config_to_json(config_).dump(2) << '\n';
    run_csv_ = std::make_unique<CsvWriter>((fs::path(output_dir_) / "run.csv").string(),
                                           run_csv_header(teacher_->arm_count()));
    metrics_csv_ = std::make_unique<CsvWriter>(
        (fs::path(output_dir_) / "metrics.csv").string(),
        std::vector<std::string>{"update_index", "level", "surrogate", "kl", "value_loss",
                                 "clip_fraction", "mean_return"});
    std::vector<std::string> ctx_header = {"round"};
    for (int i = 0; i < config_.imitation.hidden; ++i)
      ctx_header.push_back("ctx_" + std::to_string(i));
    context_csv_ = std::make_unique<CsvWriter>((fs::path(output_dir_) / "contexts.csv").string(),
                                               ctx_header);
  }
}

void CurriculumRun::refresh_imitation() {
  if (behavior_window_.empty()) return;
  std::vector<ImitationModel::Sequence> data(behavior_window_.begin(), behavior_window_.end());
  Rng train_rng = rng_.fork(900000 + round_);
  imitation_->train(data, config_.imitation_epochs, config_.imitation.learning_rate, train_rng);
}

std::vector<double> CurriculumRun::current_context() {
  if (behavior_window_.empty()) {
    // No behavior yet: the context of an empty history is the model's
    // response to a single zero observation.
    return imitation_->extract_context({Matrix::zeros(1, config_.imitation.obs_dim)});
  }
  std::vector<Matrix> recent;
  const int want = std::max(1, config_.context_trajectories);
  for (auto it = behavior_window_.rbegin(); it != behavior_window_.rend() &&
                                            static_cast<int>(recent.size()) < want;
       ++it)
    recent.push_back(it->observations);
  return imitation_->extract_context(recent);
}

RoundRecord CurriculumRun::run_round() {
  // (1) refresh the imitation model on recent behavior, extract the context
  refresh_imitation();
  const std::vector<double> context = current_context();

  // (2)-(3) teacher: cluster the context, sample the training task
  const int cluster = teacher_->observe_context(context);
  Rng teacher_rng = rng_.fork(100000 + round_);
  const auto [task, distribution] = teacher_->sample_task(teacher_rng);

  // (4) train on the sampled task
  const Rng seeds = rng_.fork(200000 + round_);
  RolloutOptions opt;
  opt.discount = config_.trainer.discount;
  opt.env_seed = seeds.fork(0).seed();
  opt.policy_seed = seeds.fork(1).seed();
  auto make_env = [&]() {
    return std::unique_ptr<RolloutEnv>(
        new ParticleEnv(task, config_.physics, config_.populations));
  };
  TrajectoryBatch batch =
      collect_episodes(make_env, *policy_, config_.train_episodes, opt, config_.workers != 1);

  // Fold the new behavior into the imitation window (one sequence per
  // (episode, agent) stream).
  for (size_t s = 0; s < batch.low.segments.size(); ++s) {
    const auto [start, len] = batch.low.segments[s];
    ImitationModel::Sequence seq;
    seq.observations = Matrix(len, config_.imitation.obs_dim);
    for (int t = 0; t < len; ++t) {
      for (int d = 0; d < config_.imitation.obs_dim; ++d)
        seq.observations.at(t, d) = batch.low.obs.at(start + t, d);
      seq.actions.push_back(batch.low.actions[start + t]);
    }
    behavior_transitions_ += len;
    behavior_window_.push_back(std::move(seq));
  }
  while (behavior_transitions_ > config_.imitation_window && behavior_window_.size() > 1) {
    behavior_transitions_ -= behavior_window_.front().observations.rows;
    behavior_window_.pop_front();
  }

  double train_return_mean = 0.0;
  for (double r : batch.episode_discounted_returns) train_return_mean += r;
  train_return_mean /= std::max<size_t>(1, batch.episode_discounted_returns.size());

  Rng update_rng = rng_.fork(300000 + round_);
  const auto [low_metrics, high_metrics] = trainer_.update(*policy_, batch, update_rng);
  if (metrics_csv_) {
    for (const auto& [level, m] :
         {std::pair<const char*, const UpdateMetrics&>{"low", low_metrics},
          std::pair<const char*, const UpdateMetrics&>{"high", high_metrics}}) {
      metrics_csv_->write_row({std::to_string(update_index_), level, format_double(m.surrogate),
                               format_double(m.kl), format_double(m.value_loss),
                               format_double(m.clip_fraction), format_double(m.mean_return)});
    }
    ++update_index_;
  }

  // (5) evaluate on the target task
  const EvalResult eval =
      evaluate_target(*policy_, config_.target_task(), config_.physics, config_.populations,
                      config_.eval_episodes, config_.trainer.discount,
                      rng_.fork(400000 + round_).seed());

  // (6) report the return to the teacher
  const double normalized = teacher_->report_return(eval.mean_discounted_return);

  // Per-arm value estimates for the objective diagnostic: training returns
  // credit the sampled arm; the target arm also tracks evaluation returns.
  value_estimates_[task.task_id] = train_return_mean;
  if (config_.target_task().task_id >= 0)
    value_estimates_[config_.target_task().task_id] = eval.mean_discounted_return;
  std::vector<double> target_dist(teacher_->arm_count(), 0.0);
  if (config_.target_task().task_id >= 0) target_dist[config_.target_task().task_id] = 1.0;

  RoundRecord rec;
  rec.round = round_;
  rec.cluster_id = cluster;
  rec.task_id = task.task_id;
  rec.task_distribution = distribution.probabilities;
  rec.raw_return = eval.mean_discounted_return;
  rec.normalized_reward = normalized;
  rec.target_return = eval.mean_discounted_return;
  rec.target_coverage = eval.mean_coverage;
  rec.objective_estimate =
      estimate_objective(distribution.probabilities, target_dist, value_estimates_);

  if (context_csv_) {
    std::vector<std::string> row = {std::to_string(round_)};
    for (double v : context) row.push_back(format_double(v));
    context_csv_->write_row(row);
  }
  log_round(rec);
  records_.push_back(rec);
  ++round_;
  return rec;
}

void CurriculumRun::log_round(const RoundRecord& rec) {
  if (!run_csv_) return;
  std::vector<std::string> row = {std::to_string(rec.round), std::to_string(rec.cluster_id),
                                  std::to_string(rec.task_id)};
  for (double p : rec.task_distribution) row.push_back(format_double(p));
  row.push_back(format_double(rec.raw_return));
  row.push_back(format_double(rec.normalized_reward));
  row.push_back(format_double(rec.target_return));
  row.push_back(format_double(rec.target_coverage));
  row.push_back(format_double(rec.objective_estimate));
  run_csv_->write_row(row);
  run_csv_->flush();
}

void CurriculumRun::run_all() {
  for (long r = round_; r < config_.rounds; ++r) {
    run_round();
    if (config_.checkpoint_every > 0 && round_ % config_.checkpoint_every == 0 &&
        !output_dir_.empty())
      save((std::filesystem::path(output_dir_) / ("ckpt_" + std::to_string(round_))).string());
  }
  if (!output_dir_.empty())
    save((std::filesystem::path(output_dir_) / "final").string());
}

void CurriculumRun::save(const std::string& dir) const {
  save_checkpoint(dir, *policy_, imitation_.get(), teacher_.get(), round_, config_.seed);
}

void CurriculumRun::load(const std::string& dir) {
  const LoadedCheckpoint ckpt = load_checkpoint(dir);
  apply_tensors(ckpt, "student", policy_->params());
  if (ckpt.manifest.contains("imitation")) apply_tensors(ckpt, "imitation", imitation_->params());
  if (!ckpt.teacher_state.is_null()) restore_teacher(ckpt.teacher_state, *teacher_);
  round_ = ckpt.round;
}

}  // namespace curricula
