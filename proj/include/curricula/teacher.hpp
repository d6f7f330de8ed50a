#pragma once

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "curricula/bandit.hpp"
#include "curricula/clustering.hpp"
#include "curricula/env.hpp"

namespace curricula {

struct TeacherConfig {
  double alpha = 0.0;         // <= 0: tuned from horizon_estimate (0.1 fallback)
  long horizon_estimate = 0;  // expected teacher rounds
  UpdateRule update_rule = UpdateRule::kPaperLiteral;
  CFTreeConfig tree;
  int buffer_capacity = 512;
  bool normalize_contexts = true;
  bool warm_start = false;  // new clusters copy the nearest survivor's weights
};

// The curriculum generator: maintains a bounded context buffer, discretizes
// contexts into clusters, runs one Exp3 instance per cluster, samples
// training tasks, and consumes min/max-normalized student returns. The
// protocol is a strict cycle observe_context -> sample_task -> report_return;
// out-of-order calls throw.
class Teacher {
 public:
  Teacher(std::vector<TaskSpec> task_set, int context_dim, TeacherConfig config);

  int observe_context(std::span<const double> context);
  std::pair<TaskSpec, ArmDistribution> sample_task(Rng& rng);
  double report_return(double raw_return);

  double alpha() const { return alpha_; }
  int arm_count() const { return static_cast<int>(task_set_.size()); }
  const std::vector<TaskSpec>& task_set() const { return task_set_; }
  int active_cluster() const;
  int last_task_id() const;
  const ArmDistribution& last_distribution() const;
  int cluster_count() const { return static_cast<int>(instances_.size()); }
  const Exp3Instance& instance(int cluster_id) const { return instances_.at(cluster_id); }
  const CFTree& tree() const { return tree_; }
  const std::deque<std::vector<double>>& context_buffer() const { return buffer_; }
  const TeacherConfig& config() const { return config_; }

  struct NormalizerState {
    double min = 0.0, max = 0.0;
    long count = 0;
  };
  const NormalizerState& return_normalizer() const { return normalizer_; }
  const RunningStandardizer& context_standardizer() const { return standardizer_; }

  // Checkpoint restore hooks.
  void restore_normalizer(NormalizerState s) { normalizer_ = s; }
  void restore_instances(std::map<int, Exp3Instance> instances,
                         std::map<int, long> generations) {
    instances_ = std::move(instances);
    instance_generation_ = std::move(generations);
  }
  CFTree& mutable_tree() { return tree_; }
  RunningStandardizer& mutable_standardizer() { return standardizer_; }
  std::deque<std::vector<double>>& mutable_buffer() { return buffer_; }

 private:
  enum class Phase { kObserve, kSample, kReport };
  void sync_instances();

  std::vector<TaskSpec> task_set_;
  TeacherConfig config_;
  double alpha_;
  CFTree tree_;
  RunningStandardizer standardizer_;
  std::deque<std::vector<double>> buffer_;
  std::map<int, Exp3Instance> instances_;
  std::map<int, long> instance_generation_;
  NormalizerState normalizer_;

  Phase phase_ = Phase::kObserve;
  int active_cluster_ = -1;
  int sampled_arm_ = -1;
  double sampled_prob_ = 0.0;
  ArmDistribution last_distribution_;
};

}  // namespace curricula
