#include "curricula/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace curricula {

Exp3Instance Exp3Instance::uniform(int arms, double alpha, UpdateRule rule) {
  if (arms <= 0) throw std::invalid_argument("Exp3Instance: arm_count must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("Exp3Instance: alpha must be in (0,1]");
  Exp3Instance inst;
  inst.weights.assign(arms, 1.0);
  inst.alpha = alpha;
  inst.arm_count = arms;
  inst.update_rule = rule;
  return inst;
}

void Exp3Instance::validate() const {
  if (arm_count <= 0 || static_cast<int>(weights.size()) != arm_count)
    throw std::runtime_error("Exp3Instance: arm_count does not match weights");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::runtime_error("Exp3Instance: alpha out of (0,1]");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::runtime_error("Exp3Instance: weights must be strictly positive and finite");
}

ArmDistribution exp3_probabilities(const Exp3Instance& instance) {
  instance.validate();
  const int k = instance.arm_count;
  double sum = 0.0;
  for (double w : instance.weights) sum += w;
  ArmDistribution dist;
  dist.probabilities.resize(k);
  for (int i = 0; i < k; ++i)
    dist.probabilities[i] =
        (1.0 - instance.alpha) * instance.weights[i] / sum + instance.alpha / k;
  return dist;
}

void exp3_update(Exp3Instance& instance, int arm, double reward, double chosen_prob) {
  instance.validate();
  if (arm < 0 || arm >= instance.arm_count)
    throw std::invalid_argument("exp3_update: arm index out of range");
  if (!(reward >= 0.0 && reward <= 1.0))
    throw std::invalid_argument("exp3_update: reward must lie in [0,1], got " +
                                std::to_string(reward));
  double estimate = reward;
  if (instance.update_rule == UpdateRule::kImportanceWeighted) {
    if (!(chosen_prob > 0.0))
      throw std::invalid_argument("exp3_update: chosen_prob must be positive");
    estimate = reward / chosen_prob;
  }
  instance.weights[arm] *= std::exp(instance.alpha * estimate / instance.arm_count);

  double max_w = *std::max_element(instance.weights.begin(), instance.weights.end());
  if (max_w > instance.overflow_guard) {
    // Rescaling by the max keeps the probability map unchanged; the floor
    // stops repeatedly-rescaled cold arms from underflowing to zero (their
    // probability is pinned near alpha/K by the mixing term anyway).
    for (double& w : instance.weights) w = std::max(w / max_w, 1e-280);
  }
}

int sample_arm(const ArmDistribution& dist, Rng& rng) {
  if (dist.probabilities.empty()) throw std::invalid_argument("sample_arm: empty distribution");
  double sum = 0.0;
  for (double p : dist.probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw std::invalid_argument("sample_arm: invalid probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("sample_arm: does not sum to 1");
  return rng.categorical(dist.probabilities);
}

double tuned_alpha(int arms, long horizon_estimate) {
  if (horizon_estimate <= 1 || arms <= 1) return 0.1;
  const double k = static_cast<double>(arms);
  const double v = std::sqrt(k * std::log(k) / ((M_E - 1.0) * static_cast<double>(horizon_estimate)));
  return std::min(1.0, v);
}

Exp3Instance& ContextualRouter::get_or_create(int64_t key) {
  auto it = instances_.find(key);
  if (it == instances_.end())
    it = instances_.emplace(key, Exp3Instance::uniform(arms_, alpha_, rule_)).first;
  return it->second;
}

ContextualRouter::ActResult ContextualRouter::act(int64_t key, Rng& rng) {
  Exp3Instance& inst = get_or_create(key);
  ActResult res;
  res.distribution = exp3_probabilities(inst);
  res.arm = sample_arm(res.distribution, rng);
  return res;
}

void ContextualRouter::update(int64_t key, int arm, double reward, double chosen_prob) {
  exp3_update(get_or_create(key), arm, reward, chosen_prob);
}

MeshGrid::MeshGrid(double eps) : epsilon(eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("MeshGrid: epsilon must be in (0,1]");
  points.push_back(0.0);
  for (int i = 1;; ++i) {
    const double p = i * eps;
    if (p >= 1.0 - 1e-12) break;
    points.push_back(p);
  }
  points.push_back(1.0);
}

int mesh_index(double x, const MeshGrid& grid) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("mesh_index: x must lie in [0,1]");
  // Points are sorted; find the first point >= x and compare with its
  // predecessor. An exact tie goes to the smaller point.
  const auto& pts = grid.points;
  auto it = std::lower_bound(pts.begin(), pts.end(), x);
  if (it == pts.end()) return static_cast<int>(pts.size()) - 1;
  int hi = static_cast<int>(it - pts.begin());
  if (hi == 0) return 0;
  const double d_lo = x - pts[hi - 1];
  const double d_hi = pts[hi] - x;
  return d_lo <= d_hi ? hi - 1 : hi;
}

double epsilon_star(int arm_count, long horizon, double lipschitz_constant) {
  if (arm_count < 1) throw std::invalid_argument("epsilon_star: K must be >= 1");
  if (horizon < 2) throw std::invalid_argument("epsilon_star: T must be >= 2");
  if (!(lipschitz_constant > 0.0)) throw std::invalid_argument("epsilon_star: L must be positive");
  const double t = static_cast<double>(horizon);
  const double raw = std::cbrt(arm_count * std::log(t) / (t * lipschitz_constant * lipschitz_constant));
  return std::min(1.0, raw);
}

}  // namespace curricula
