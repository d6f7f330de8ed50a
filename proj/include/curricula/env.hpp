#pragma once

#include <array>
#include <string>
#include <vector>

#include "curricula/rng.hpp"
#include "curricula/rollout_env.hpp"

namespace curricula {

enum class EnvFamily { kSimpleSpread, kPushBall };

std::string family_name(EnvFamily family);
EnvFamily family_from_string(const std::string& name);

// One point in the task space: environment family, population size, and the
// episode cap. task_id indexes the teacher's arm list.
struct TaskSpec {
  EnvFamily family = EnvFamily::kSimpleSpread;
  int population = 2;
  int max_steps = 25;
  int task_id = 0;
};

struct PhysicsConfig {
  double dt = 0.1;
  double damping = 0.25;
  double max_speed = 1.0;
  double cover_radius = 0.15;
  double collision_radius = 0.1;
  double success_bonus = 5.0;
  double collision_penalty = 0.5;
  double force_strength = 6.0;
  int entity_slots = 8;       // nearest-k slots per entity type in observations
  double spawn_extent = 0.9;  // entities spawn uniformly in [-extent, extent]^2
};

struct WorldState {
  std::vector<std::array<double, 2>> agent_pos, agent_vel;
  std::vector<std::array<double, 2>> landmark_pos;
  std::vector<std::array<double, 2>> ball_pos, ball_vel;  // push_ball only
  int step_counter = 0;
  bool completed = false;
};

// Sparse-reward cooperative particle arena on [-1,1]^2 with a parameterized
// population. Simple-Spread: n agents must cover all n landmarks. Push-Ball:
// n agents must push n balls onto the n landmarks. The team receives
// success_bonus on the step the completion condition first holds, minus
// collision_penalty per colliding agent pair; every other reward is zero.
//
// Observations have a fixed width regardless of n: self position/velocity
// plus nearest-k slots of (relative position, validity flag) per entity type.
// Dynamics are a damped double integrator with five discrete force actions
// {no-op, +x, -x, +y, -y}, deterministic given (seed, action sequence).
class ParticleEnv : public RolloutEnv {
 public:
  ParticleEnv(TaskSpec spec, PhysicsConfig physics, const std::vector<int>& allowed_populations);

  int agent_count() const override { return spec_.population; }
  int obs_dim() const override;
  int max_steps() const override { return spec_.max_steps; }
  Matrix reset(uint64_t seed) override;
  StepOutcome step(const std::vector<int>& actions) override;

  double coverage_rate() const;
  const WorldState& state() const { return state_; }
  void set_state(WorldState s) { state_ = std::move(s); }
  const TaskSpec& spec() const { return spec_; }
  const PhysicsConfig& physics() const { return physics_; }

  static int observation_dim(EnvFamily family, int entity_slots);

 private:
  Matrix observations() const;
  void observe_entities(int agent, const std::vector<std::array<double, 2>>& entities,
                        bool skip_self, double* out) const;
  int collision_pairs() const;

  TaskSpec spec_;
  PhysicsConfig physics_;
  WorldState state_;
};

// Constructs an environment for the given task; the population must belong
// to the configured task space.
ParticleEnv make_task(const TaskSpec& spec, const PhysicsConfig& physics,
                      const std::vector<int>& allowed_populations);

}  // namespace curricula
