#pragma once

#include <cstdint>
#include <vector>

#include "curricula/matrix.hpp"

namespace curricula {

struct StepOutcome {
  Matrix observations;  // one row per agent
  double shared_reward = 0.0;
  bool done = false;
  double coverage = 0.0;
};

// Minimal episodic interface the rollout machinery drives. Implemented by the
// particle environments and by scripted stubs in tests.
class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;
  virtual int agent_count() const = 0;
  virtual int obs_dim() const = 0;
  virtual int max_steps() const = 0;
  virtual Matrix reset(uint64_t seed) = 0;
  virtual StepOutcome step(const std::vector<int>& actions) = 0;
};

}  // namespace curricula
