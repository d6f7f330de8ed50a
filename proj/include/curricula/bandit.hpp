#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "curricula/rng.hpp"

namespace curricula {

enum class UpdateRule {
  // Multiply the chosen arm's weight by exp(alpha * r / K).
  kPaperLiteral,
  // Classical Exp3: multiply by exp(alpha * (r / p_chosen) / K).
  kImportanceWeighted,
};

// One exponential-weight bandit over K arms with exploration mixing rate
// alpha in (0, 1]. Weights stay strictly positive and finite; when the
// largest weight passes the overflow guard all weights are divided by it,
// which leaves the probability map unchanged.
struct Exp3Instance {
  std::vector<double> weights;
  double alpha = 0.1;
  int arm_count = 0;
  UpdateRule update_rule = UpdateRule::kPaperLiteral;
  double overflow_guard = 1e100;

  static Exp3Instance uniform(int arms, double alpha,
                              UpdateRule rule = UpdateRule::kPaperLiteral);
  void validate() const;
};

struct ArmDistribution {
  std::vector<double> probabilities;
  int arms() const { return static_cast<int>(probabilities.size()); }
};

// p_k = (1 - alpha) * w_k / sum_j w_j + alpha / K.
ArmDistribution exp3_probabilities(const Exp3Instance& instance);

// Applies the configured multiplicative update to the chosen arm.
// reward must already be normalized to [0, 1]; chosen_prob is the
// probability the arm was sampled under (used by the importance-weighted
// rule only).
void exp3_update(Exp3Instance& instance, int arm, double reward, double chosen_prob);

// Samples an index by cumulative inversion over dist.
int sample_arm(const ArmDistribution& dist, Rng& rng);

// Classical alpha tuning: min(1, sqrt(K ln K / ((e-1) T))) given a horizon
// estimate, else the 0.1 fallback.
double tuned_alpha(int arms, long horizon_estimate);

// One independent Exp3 instance per context key, created lazily with
// uniform weights on first sight.
class ContextualRouter {
 public:
  ContextualRouter(int arms, double alpha, UpdateRule rule = UpdateRule::kPaperLiteral)
      : arms_(arms), alpha_(alpha), rule_(rule) {}

  struct ActResult {
    ArmDistribution distribution;
    int arm = 0;
  };
  ActResult act(int64_t key, Rng& rng);
  void update(int64_t key, int arm, double reward, double chosen_prob);

  bool has(int64_t key) const { return instances_.count(key) > 0; }
  const Exp3Instance& instance(int64_t key) const { return instances_.at(key); }
  int instance_count() const { return static_cast<int>(instances_.size()); }

 private:
  Exp3Instance& get_or_create(int64_t key);
  int arms_;
  double alpha_;
  UpdateRule rule_;
  std::map<int64_t, Exp3Instance> instances_;
};

// Uniform mesh over [0, 1]: multiples of epsilon, with the final point
// clipped to 1 so the grid always covers the interval with gaps <= epsilon.
struct MeshGrid {
  double epsilon = 1.0;
  std::vector<double> points;

  explicit MeshGrid(double eps);
  int point_count() const { return static_cast<int>(points.size()); }
};

// Index of the closest mesh point; exact ties resolve to the smaller point.
int mesh_index(double x, const MeshGrid& grid);

// epsilon* = (K ln T / (T L^2))^(1/3), clamped into (0, 1].
double epsilon_star(int arm_count, long horizon, double lipschitz_constant);

}  // namespace curricula
