#pragma once

#include <span>
#include <string>
#include <vector>

#include "curricula/autodiff.hpp"
#include "curricula/matrix.hpp"
#include "curricula/rng.hpp"

namespace curricula {

enum class SkillMode { kDiscrete, kContinuous };

struct StudentConfig {
  int obs_dim = 0;
  int d_m = 32;       // message width
  int d_skill = 4;    // option count / embedding width
  int heads = 1;      // attention heads (must divide d_m)
  int interval = 5;   // high-level decision period in steps
  int hidden = 64;    // trunk width for both levels
  int n_actions = 5;  // low-level action set size
  SkillMode skill_mode = SkillMode::kDiscrete;
};

// High-level action: a one-hot option or a tanh-squashed continuous
// embedding, both d_skill wide.
struct SkillAction {
  SkillMode mode = SkillMode::kDiscrete;
  std::vector<double> value;       // one-hot or squashed embedding
  int option = -1;                 // discrete mode only
  std::vector<double> pre_squash;  // continuous mode: the raw Gaussian sample
};

// Shared-parameter hierarchical policy with a self-attention message channel.
// Parameter shapes depend only on the observation width and the configured
// message/skill/hidden sizes, never on the number of agents, so one
// checkpoint serves any population.
class StudentPolicy {
 public:
  StudentPolicy(StudentConfig config, uint64_t init_seed);

  const StudentConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  long version() const { return version_; }
  void bump_version() { ++version_; }

  // observation -> message, m = o W_enc + b_enc
  std::vector<double> encode(std::span<const double> obs) const;
  Matrix encode_all(const Matrix& team_obs) const;

  // Self-attention channel over the message matrix (n x d_m):
  // softmax(Q K^T / sqrt(d_head)) V per head, heads concatenated.
  Matrix channel(const Matrix& messages) const;

  struct HighResult {
    SkillAction skill;
    double log_prob = 0.0;
    double value = 0.0;
    std::vector<double> dist_info;  // discrete: per-option log-probs;
                                    // continuous: mean then log-std
  };
  HighResult high_step(std::span<const double> obs, std::span<const double> message, Rng& rng,
                       bool greedy = false) const;

  struct LowResult {
    int action = 0;
    double log_prob = 0.0;
    double value = 0.0;
    std::vector<double> log_probs;  // full per-action log-probs
  };
  LowResult low_step(std::span<const double> obs, const SkillAction& skill, Rng& rng,
                     bool greedy = false) const;

  // Tape forwards used by the trainer. Inputs are constant nodes already on
  // the tape; parameters are pulled from the bound store.
  struct TapeHeads {
    ValueId policy_out;  // logits (discrete) or means (continuous)
    ValueId value;
  };
  TapeHeads low_forward(Tape& tape, ValueId obs_and_skill) const;
  TapeHeads high_forward(Tape& tape, ValueId team_obs) const;
  ValueId channel_forward(Tape& tape, ValueId messages) const;

  // Test helper: redraws every parameter uniformly in [-scale, scale].
  void randomize(Rng& rng, double scale);

 private:
  Matrix attention(const Matrix& q, const Matrix& k, const Matrix& v) const;

  StudentConfig config_;
  ParamStore params_;
  long version_ = 0;
};

}  // namespace curricula
