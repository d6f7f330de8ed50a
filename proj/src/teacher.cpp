#include "curricula/teacher.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace curricula {

Teacher::Teacher(std::vector<TaskSpec> task_set, int context_dim, TeacherConfig config)
    : task_set_(std::move(task_set)),
      config_(config),
      alpha_(config.alpha > 0.0 ? config.alpha
                                : tuned_alpha(static_cast<int>(task_set_.size()),
                                              config.horizon_estimate)),
      tree_(context_dim, config.tree),
      standardizer_(context_dim) {
  if (task_set_.empty()) throw std::invalid_argument("Teacher: task set must not be empty");
  if (config_.buffer_capacity < 1) throw std::invalid_argument("Teacher: buffer capacity");
  for (size_t i = 0; i < task_set_.size(); ++i)
    if (task_set_[i].task_id != static_cast<int>(i))
      throw std::invalid_argument("Teacher: task_id must index the task set");
}

void Teacher::sync_instances() {
  // One Exp3 instance per published center; fresh or regenerated ids start
  // uniform (or copy the nearest survivor under warm_start).
  const auto& centers = tree_.centers();
  std::map<int, Exp3Instance> next;
  std::map<int, long> next_gen;
  for (const auto& c : centers) {
    auto it = instances_.find(c.id);
    const bool stale = it == instances_.end() || instance_generation_[c.id] != c.generation;
    if (!stale) {
      next.emplace(c.id, it->second);
    } else if (config_.warm_start && !instances_.empty()) {
      // Nearest surviving center's instance, by centroid distance.
      double best = std::numeric_limits<double>::infinity();
      int best_id = -1;
      for (const auto& other : centers) {
        if (other.id == c.id) continue;
        auto oit = instances_.find(other.id);
        if (oit == instances_.end() || instance_generation_[other.id] != other.generation) continue;
        double d = 0.0;
        for (size_t k = 0; k < c.centroid.size(); ++k) {
          const double diff = c.centroid[k] - other.centroid[k];
          d += diff * diff;
        }
        if (d < best) {
          best = d;
          best_id = other.id;
        }
      }
      next.emplace(c.id, best_id >= 0 ? instances_.at(best_id)
                                      : Exp3Instance::uniform(arm_count(), alpha_,
                                                              config_.update_rule));
    } else {
      next.emplace(c.id, Exp3Instance::uniform(arm_count(), alpha_, config_.update_rule));
    }
    next_gen[c.id] = c.generation;
  }
  instances_ = std::move(next);
  instance_generation_ = std::move(next_gen);
}

int Teacher::observe_context(std::span<const double> context) {
  if (phase_ != Phase::kObserve)
    throw std::logic_error("Teacher: observe_context called out of protocol order");
  for (double v : context)
    if (!std::isfinite(v)) throw std::invalid_argument("Teacher: non-finite context");

  buffer_.emplace_back(context.begin(), context.end());
  while (static_cast<int>(buffer_.size()) > config_.buffer_capacity) buffer_.pop_front();

  ClusterAssignment assignment;
  if (config_.normalize_contexts) {
    standardizer_.observe(context);
    assignment = tree_.insert(standardizer_.normalize(context));
  } else {
    assignment = tree_.insert(context);
  }
  sync_instances();
  active_cluster_ = assignment.cluster_id;
  phase_ = Phase::kSample;
  return active_cluster_;
}

std::pair<TaskSpec, ArmDistribution> Teacher::sample_task(Rng& rng) {
  if (phase_ != Phase::kSample)
    throw std::logic_error("Teacher: sample_task requires a preceding observe_context");
  const Exp3Instance& inst = instances_.at(active_cluster_);
  last_distribution_ = exp3_probabilities(inst);
  sampled_arm_ = sample_arm(last_distribution_, rng);
  sampled_prob_ = last_distribution_.probabilities[sampled_arm_];
  phase_ = Phase::kReport;
  return {task_set_[sampled_arm_], last_distribution_};
}

double Teacher::report_return(double raw_return) {
  if (phase_ != Phase::kReport)
    throw std::logic_error("Teacher: report_return requires a preceding sample_task");
  if (!std::isfinite(raw_return)) throw std::invalid_argument("Teacher: non-finite return");

  // Running min/max squash; the current return is folded in first so the
  // degenerate zero-range case maps to 0.5.
  if (normalizer_.count == 0) {
    normalizer_.min = raw_return;
    normalizer_.max = raw_return;
  } else {
    normalizer_.min = std::min(normalizer_.min, raw_return);
    normalizer_.max = std::max(normalizer_.max, raw_return);
  }
  ++normalizer_.count;
  const double range = normalizer_.max - normalizer_.min;
  const double reward = range > 0.0 ? (raw_return - normalizer_.min) / range : 0.5;

  exp3_update(instances_.at(active_cluster_), sampled_arm_, reward, sampled_prob_);
  phase_ = Phase::kObserve;
  return reward;
}

int Teacher::active_cluster() const {
  if (active_cluster_ < 0) throw std::logic_error("Teacher: no context observed yet");
  return active_cluster_;
}

int Teacher::last_task_id() const {
  if (sampled_arm_ < 0) throw std::logic_error("Teacher: no task sampled yet");
  return sampled_arm_;
}

const ArmDistribution& Teacher::last_distribution() const {
  if (last_distribution_.probabilities.empty())
    throw std::logic_error("Teacher: no task sampled yet");
  return last_distribution_;
}

}  // namespace curricula
