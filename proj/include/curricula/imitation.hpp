#pragma once

#include <vector>

#include "curricula/autodiff.hpp"
#include "curricula/matrix.hpp"
#include "curricula/rng.hpp"

namespace curricula {

struct ImitationConfig {
  int obs_dim = 0;
  int hidden = 32;    // d_x, the context width handed to the teacher
  int n_actions = 5;
  double learning_rate = 0.1;
  bool adam = false;
};

// Recurrent imitation model over the student's recent behavior: a gated
// recurrent cell unrolled over observation sequences with a linear head that
// predicts the action taken at each step. The final hidden state is the
// policy representation (the bandit context).
class ImitationModel {
 public:
  struct Sequence {
    Matrix observations;       // T x obs_dim
    std::vector<int> actions;  // length T
  };

  ImitationModel(ImitationConfig config, uint64_t init_seed);

  const ImitationConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  struct Unroll {
    Matrix hidden_states;  // T x hidden
    Matrix logits;         // T x n_actions
  };
  Unroll forward(const Matrix& observations) const;

  // Trains by gradient descent on the cross-entropy between predicted and
  // taken actions. Returns the dataset loss after each epoch.
  std::vector<double> train(const std::vector<Sequence>& data, int epochs, double learning_rate,
                            Rng& rng);

  double dataset_loss(const std::vector<Sequence>& data) const;
  double dataset_accuracy(const std::vector<Sequence>& data) const;

  // Final hidden state per trajectory, averaged elementwise.
  std::vector<double> extract_context(const std::vector<Matrix>& trajectories) const;

 private:
  // Length-bucketed batched unroll on a tape; returns the mean step loss id.
  ValueId batched_loss(Tape& tape, const std::vector<const Sequence*>& group) const;

  ImitationConfig config_;
  ParamStore params_;
};

}  // namespace curricula
