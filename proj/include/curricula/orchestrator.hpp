#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>

#include "curricula/checkpoint.hpp"
#include "curricula/config.hpp"
#include "curricula/csvlog.hpp"
#include "curricula/rollout.hpp"
#include "curricula/teacher.hpp"
#include "curricula/trainer.hpp"

namespace curricula {

struct RoundRecord {
  long round = 0;
  int cluster_id = 0;
  int task_id = 0;
  std::vector<double> task_distribution;
  double raw_return = 0.0;
  double normalized_reward = 0.0;
  double target_return = 0.0;
  double target_coverage = 0.0;
  double objective_estimate = 0.0;  // importance-weighted Eq.-style diagnostic
};

struct EvalResult {
  double mean_discounted_return = 0.0;
  double mean_coverage = 0.0;
  std::vector<double> per_episode_returns;
};

// Greedy-mode evaluation on fresh seeded instances of the given task.
EvalResult evaluate_target(const StudentPolicy& policy, const TaskSpec& task,
                           const PhysicsConfig& physics, const std::vector<int>& allowed,
                           int episodes, double gamma, uint64_t seed_base);

// Stochastic evaluation with uniformly random actions (baseline).
EvalResult evaluate_random_policy(const StudentConfig& student, const TaskSpec& task,
                                  const PhysicsConfig& physics, const std::vector<int>& allowed,
                                  int episodes, double gamma, uint64_t seed_base);

// J = sum_phi q(phi) * (p(phi)/q(phi)) * V(phi), computed in the
// importance-weighted form. Warns (returning the direct sum) when p puts
// mass where q has none.
double estimate_objective(const std::vector<double>& training_distribution,
                          const std::vector<double>& target_distribution,
                          const std::vector<double>& value_estimates,
                          bool* support_violation = nullptr);

// One full experiment: wires teacher, imitation context, student, trainer and
// environments into teacher rounds, owns the run CSVs and checkpoints.
class CurriculumRun {
 public:
  CurriculumRun(ExperimentConfig config, const std::string& output_dir);

  RoundRecord run_round();
  void run_all();  // config.rounds rounds, with checkpointing and logging

  const StudentPolicy& policy() const { return *policy_; }
  StudentPolicy& mutable_policy() { return *policy_; }
  const Teacher& teacher() const { return *teacher_; }
  const ImitationModel& imitation() const { return *imitation_; }
  const ExperimentConfig& config() const { return config_; }
  long rounds_completed() const { return round_; }
  const std::vector<RoundRecord>& records() const { return records_; }

  void save(const std::string& dir) const;
  void load(const std::string& dir);

  static const std::vector<std::string>& run_csv_header(int arms);

 private:
  std::vector<double> current_context();
  void refresh_imitation();
  void log_round(const RoundRecord& rec);

  ExperimentConfig config_;
  std::string output_dir_;
  std::unique_ptr<StudentPolicy> policy_;
  std::unique_ptr<ImitationModel> imitation_;
  std::unique_ptr<Teacher> teacher_;
  PpoTrainer trainer_;
  Rng rng_;

  // Recent student behavior for the imitation refresh and context window.
  std::deque<ImitationModel::Sequence> behavior_window_;
  long behavior_transitions_ = 0;
  std::vector<double> value_estimates_;  // per-arm running value estimates

  long round_ = 0;
  std::vector<RoundRecord> records_;
  std::unique_ptr<CsvWriter> run_csv_;
  std::unique_ptr<CsvWriter> metrics_csv_;
  std::unique_ptr<CsvWriter> context_csv_;
  long update_index_ = 0;
};

}  // namespace curricula
