#include "curricula/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

namespace curricula {

namespace {

using nlohmann::json;

// Pulls a value if present, enforcing that every key in the block is known.
class Block {
 public:
  Block(const json& doc, const std::string& name) : name_(name) {
    if (!doc.contains(name))
      throw std::invalid_argument("config: missing required block '" + name + "'");
    block_ = doc.at(name);
    if (!block_.is_object())
      throw std::invalid_argument("config: block '" + name + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (block_.contains(key)) {
      try {
        out = block_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw std::invalid_argument("config: bad value for " + name_ + "." + key + ": " + e.what());
      }
    }
  }

  void finish() const {
    for (const auto& [key, value] : block_.items()) {
      (void)value;
      if (!seen_.count(key))
        throw std::invalid_argument("config: unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  std::string name_;
  json block_;
  std::set<std::string> seen_;
};

UpdateRule rule_from_string(const std::string& s) {
  if (s == "paper_literal") return UpdateRule::kPaperLiteral;
  if (s == "importance_weighted") return UpdateRule::kImportanceWeighted;
  throw std::invalid_argument("config: unknown update_rule '" + s + "'");
}

std::string rule_to_string(UpdateRule r) {
  return r == UpdateRule::kPaperLiteral ? "paper_literal" : "importance_weighted";
}

}  // namespace

std::vector<TaskSpec> ExperimentConfig::task_set() const {
  std::vector<TaskSpec> tasks;
  for (size_t i = 0; i < populations.size(); ++i)
    tasks.push_back({env_family, populations[i], max_steps, static_cast<int>(i)});
  return tasks;
}

TaskSpec ExperimentConfig::target_task() const {
  TaskSpec t{env_family, target_population, max_steps, -1};
  const auto it = std::find(populations.begin(), populations.end(), target_population);
  if (it != populations.end()) t.task_id = static_cast<int>(it - populations.begin());
  return t;
}

int ExperimentConfig::observation_dim() const {
  return ParticleEnv::observation_dim(env_family, physics.entity_slots);
}

void ExperimentConfig::validate() const {
  if (populations.empty()) throw std::invalid_argument("config: populations must not be empty");
  for (int n : populations)
    if (n < 1) throw std::invalid_argument("config: populations must be positive");
  const int max_pop = *std::max_element(populations.begin(), populations.end());
  const bool in_list = std::find(populations.begin(), populations.end(), target_population) !=
                       populations.end();
  if (!in_list && target_population <= max_pop)
    throw std::invalid_argument(
        "config: target_population must appear in or beyond the training populations");
  if (max_steps < 1) throw std::invalid_argument("config: max_steps must be positive");
  if (rounds < 1) throw std::invalid_argument("config: rounds must be positive");
  if (train_episodes < 1 || eval_episodes < 1)
    throw std::invalid_argument("config: episode counts must be positive");
  trainer.validate();
}

ExperimentConfig parse_experiment_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config: document must be a JSON object");
  static const std::set<std::string> kBlocks = {"task_space", "teacher", "student", "trainer",
                                                "imitation", "env", "run"};
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (!kBlocks.count(key)) throw std::invalid_argument("config: unknown block '" + key + "'");
  }

  ExperimentConfig cfg;

  {
    Block b(doc, "task_space");
    std::string family = family_name(cfg.env_family);
    b.get("env_family", family);
    cfg.env_family = family_from_string(family);
    b.get("populations", cfg.populations);
    b.get("max_steps", cfg.max_steps);
    b.get("target_population", cfg.target_population);
    b.finish();
  }
  {
    Block b(doc, "teacher");
    b.get("alpha", cfg.teacher.alpha);
    b.get("n_clusters", cfg.teacher.tree.max_clusters);
    b.get("merge_threshold", cfg.teacher.tree.merge_threshold);
    b.get("branching_factor", cfg.teacher.tree.branching_factor);
    b.get("rebuild_every", cfg.teacher.tree.rebuild_every);
    b.get("context_buffer", cfg.teacher.buffer_capacity);
    b.get("warm_start", cfg.teacher.warm_start);
    b.get("normalize_contexts", cfg.teacher.normalize_contexts);
    std::string rule = rule_to_string(cfg.teacher.update_rule);
    b.get("update_rule", rule);
    cfg.teacher.update_rule = rule_from_string(rule);
    b.get("train_episodes", cfg.train_episodes);
    b.get("eval_episodes", cfg.eval_episodes);
    b.finish();
  }
  {
    Block b(doc, "student");
    b.get("d_m", cfg.student.d_m);
    b.get("d_skill", cfg.student.d_skill);
    b.get("heads", cfg.student.heads);
    b.get("interval", cfg.student.interval);
    b.get("hidden", cfg.student.hidden);
    std::string mode = cfg.student.skill_mode == SkillMode::kDiscrete ? "discrete" : "continuous";
    b.get("skill_mode", mode);
    if (mode == "discrete")
      cfg.student.skill_mode = SkillMode::kDiscrete;
    else if (mode == "continuous")
      cfg.student.skill_mode = SkillMode::kContinuous;
    else
      throw std::invalid_argument("config: unknown skill_mode '" + mode + "'");
    b.finish();
  }
  {
    Block b(doc, "trainer");
    b.get("discount", cfg.trainer.discount);
    b.get("gae_lambda", cfg.trainer.gae_lambda);
    b.get("kl_coefficient", cfg.trainer.kl_coefficient);
    b.get("sgd_iterations", cfg.trainer.sgd_iterations);
    b.get("learning_rate", cfg.trainer.learning_rate);
    b.get("entropy_coefficient", cfg.trainer.entropy_coefficient);
    b.get("clip", cfg.trainer.clip);
    b.get("value_clip", cfg.trainer.value_clip);
    b.get("minibatch_floor", cfg.trainer.minibatch_floor);
    b.get("minibatch_size", cfg.trainer.minibatch_size);
    b.get("adam", cfg.trainer.adam);
    b.finish();
  }
  {
    Block b(doc, "imitation");
    b.get("d_x", cfg.imitation.hidden);
    b.get("learning_rate", cfg.imitation.learning_rate);
    b.get("adam", cfg.imitation.adam);
    b.get("epochs", cfg.imitation_epochs);
    b.get("window_transitions", cfg.imitation_window);
    b.get("context_trajectories", cfg.context_trajectories);
    b.finish();
  }
  {
    Block b(doc, "env");
    b.get("dt", cfg.physics.dt);
    b.get("damping", cfg.physics.damping);
    b.get("max_speed", cfg.physics.max_speed);
    b.get("cover_radius", cfg.physics.cover_radius);
    b.get("collision_radius", cfg.physics.collision_radius);
    b.get("success_bonus", cfg.physics.success_bonus);
    b.get("collision_penalty", cfg.physics.collision_penalty);
    b.get("force_strength", cfg.physics.force_strength);
    b.get("entity_slots", cfg.physics.entity_slots);
    b.get("spawn_extent", cfg.physics.spawn_extent);
    b.get("dump_trajectories", cfg.dump_trajectories);
    b.finish();
  }
  {
    Block b(doc, "run");
    b.get("rounds", cfg.rounds);
    b.get("seed", cfg.seed);
    b.get("output_dir", cfg.output_dir);
    b.get("checkpoint_every", cfg.checkpoint_every);
    b.get("workers", cfg.workers);
    b.finish();
  }

  cfg.student.obs_dim = cfg.observation_dim();
  cfg.imitation.obs_dim = cfg.observation_dim();
  cfg.imitation.n_actions = cfg.student.n_actions;
  if (cfg.teacher.horizon_estimate == 0) cfg.teacher.horizon_estimate = cfg.rounds;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: malformed JSON in '" + path + "': " + e.what());
  }
  return parse_experiment_config(doc);
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::json doc;
  doc["task_space"] = {{"env_family", family_name(c.env_family)},
                       {"populations", c.populations},
                       {"max_steps", c.max_steps},
                       {"target_population", c.target_population}};
  doc["teacher"] = {{"alpha", c.teacher.alpha},
                    {"n_clusters", c.teacher.tree.max_clusters},
                    {"merge_threshold", c.teacher.tree.merge_threshold},
                    {"branching_factor", c.teacher.tree.branching_factor},
                    {"rebuild_every", c.teacher.tree.rebuild_every},
                    {"context_buffer", c.teacher.buffer_capacity},
                    {"warm_start", c.teacher.warm_start},
                    {"normalize_contexts", c.teacher.normalize_contexts},
                    {"update_rule", rule_to_string(c.teacher.update_rule)},
                    {"train_episodes", c.train_episodes},
                    {"eval_episodes", c.eval_episodes}};
  doc["student"] = {{"d_m", c.student.d_m},
                    {"d_skill", c.student.d_skill},
                    {"heads", c.student.heads},
                    {"interval", c.student.interval},
                    {"hidden", c.student.hidden},
                    {"skill_mode",
                     c.student.skill_mode == SkillMode::kDiscrete ? "discrete" : "continuous"}};
  doc["trainer"] = {{"discount", c.trainer.discount},
                    {"gae_lambda", c.trainer.gae_lambda},
                    {"kl_coefficient", c.trainer.kl_coefficient},
                    {"sgd_iterations", c.trainer.sgd_iterations},
                    {"learning_rate", c.trainer.learning_rate},
                    {"entropy_coefficient", c.trainer.entropy_coefficient},
                    {"clip", c.trainer.clip},
                    {"value_clip", c.trainer.value_clip},
                    {"minibatch_floor", c.trainer.minibatch_floor},
                    {"minibatch_size", c.trainer.minibatch_size},
                    {"adam", c.trainer.adam}};
  doc["imitation"] = {{"d_x", c.imitation.hidden},
                      {"learning_rate", c.imitation.learning_rate},
                      {"adam", c.imitation.adam},
                      {"epochs", c.imitation_epochs},
                      {"window_transitions", c.imitation_window},
                      {"context_trajectories", c.context_trajectories}};
  doc["env"] = {{"dt", c.physics.dt},
                {"damping", c.physics.damping},
                {"max_speed", c.physics.max_speed},
                {"cover_radius", c.physics.cover_radius},
                {"collision_radius", c.physics.collision_radius},
                {"success_bonus", c.physics.success_bonus},
                {"collision_penalty", c.physics.collision_penalty},
                {"force_strength", c.physics.force_strength},
                {"entity_slots", c.physics.entity_slots},
                {"spawn_extent", c.physics.spawn_extent},
                {"dump_trajectories", c.dump_trajectories}};
  doc["run"] = {{"rounds", c.rounds},
                {"seed", c.seed},
                {"output_dir", c.output_dir},
                {"checkpoint_every", c.checkpoint_every},
                {"workers", c.workers}};
  return doc;
}

}  // namespace curricula
