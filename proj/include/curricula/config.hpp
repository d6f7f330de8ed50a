#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "curricula/env.hpp"
#include "curricula/imitation.hpp"
#include "curricula/student.hpp"
#include "curricula/teacher.hpp"
#include "curricula/trainer.hpp"

namespace curricula {

// Full experiment description, read from a single JSON document. All blocks
// must be present; unknown keys are errors; omitted keys take the defaults
// below.
struct ExperimentConfig {
  // task_space
  EnvFamily env_family = EnvFamily::kSimpleSpread;
  std::vector<int> populations = {2, 4, 8, 16};
  int max_steps = 25;
  int target_population = 16;

  // teacher
  TeacherConfig teacher;
  int train_episodes = 10;  // student episodes per teacher round
  int eval_episodes = 5;    // target-task evaluation episodes per round

  // student (obs_dim derived from the environment family)
  StudentConfig student;

  // trainer
  TrainConfig trainer;

  // imitation
  ImitationConfig imitation;
  int imitation_epochs = 5;
  int imitation_window = 2000;      // transitions kept for refresh training
  int context_trajectories = 16;    // recent trajectories averaged into the context

  // env
  PhysicsConfig physics;
  bool dump_trajectories = false;

  // run
  long rounds = 100;
  uint64_t seed = 1;
  std::string output_dir = "out/run";
  long checkpoint_every = 0;  // 0: only final
  int workers = 0;            // 0: all available

  std::vector<TaskSpec> task_set() const;
  TaskSpec target_task() const;
  int observation_dim() const;
  void validate() const;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

}  // namespace curricula
