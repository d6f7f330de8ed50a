// Command-line front end: train / eval / regret-bench / plot.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "curricula/orchestrator.hpp"
#include "curricula/plot.hpp"
#include "curricula/regret.hpp"

namespace {

using namespace curricula;
using nlohmann::json;

int fail(int code, const std::string& message) {
  std::cerr << json{{"error", message}}.dump() << '\n';
  return code;
}

int cmd_train(const std::string& config_path, long seed_override, const std::string& out_override,
              long rounds_override) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (seed_override >= 0) config.seed = static_cast<uint64_t>(seed_override);
  if (!out_override.empty()) config.output_dir = out_override;
  if (rounds_override > 0) config.rounds = rounds_override;
  CurriculumRun run(config, config.output_dir);
  run.run_all();
  std::cout << json{{"rounds", run.rounds_completed()},
                    {"output_dir", config.output_dir},
                    {"final_coverage", run.records().empty()
                                           ? 0.0
                                           : run.records().back().target_coverage}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint_dir, int population,
             int episodes, long seed, const std::string& dump_path) {
  ExperimentConfig config = load_experiment_config(config_path);
  if (!std::filesystem::exists(std::filesystem::path(checkpoint_dir) / "manifest.json"))
    throw std::invalid_argument("missing checkpoint: " + checkpoint_dir);

  StudentPolicy policy(config.student, 0);
  const LoadedCheckpoint ckpt = load_checkpoint(checkpoint_dir);
  apply_tensors(ckpt, "student", policy.params());

  TaskSpec task = config.target_task();
  std::vector<int> allowed = config.populations;
  if (population > 0) {
    task.population = population;
    if (std::find(allowed.begin(), allowed.end(), population) == allowed.end())
      allowed.push_back(population);
  }

  if (!dump_path.empty()) {
    std::ofstream dump(dump_path);
    if (!dump) throw std::invalid_argument("cannot open dump path: " + dump_path);
    ParticleEnv env = make_task(task, config.physics, allowed);
    RolloutOptions opt;
    opt.greedy = true;
    opt.record = false;
    opt.discount = config.trainer.discount;
    opt.env_seed = Rng(static_cast<uint64_t>(seed)).fork(0).seed();
    opt.policy_seed = Rng(static_cast<uint64_t>(seed)).fork(1).seed();
    opt.step_hook = [&](int t, const std::vector<int>& actions, const StepOutcome& outcome) {
      json line;
      line["t"] = t;
      line["actions"] = actions;
      line["reward"] = outcome.shared_reward;
      line["coverage"] = outcome.coverage;
      line["done"] = outcome.done;
      json agents = json::array();
      for (const auto& p : env.state().agent_pos) agents.push_back({p[0], p[1]});
      line["agent_pos"] = agents;
      dump << line.dump() << '\n';
    };
    run_hierarchical_episode(env, policy, opt);
  }

  const EvalResult res = evaluate_target(policy, task, config.physics, allowed, episodes,
                                         config.trainer.discount, static_cast<uint64_t>(seed));
  std::cout << json{{"population", task.population},
                    {"episodes", episodes},
                    {"mean_discounted_return", res.mean_discounted_return},
                    {"mean_coverage", res.mean_coverage}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_regret_bench(int arms, double lipschitz, const std::string& horizons_csv, int seeds,
                     const std::string& rule_name, const std::string& out_dir) {
  std::vector<long> horizons;
  std::stringstream ss(horizons_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) horizons.push_back(std::stol(tok));
  if (horizons.size() < 2) throw std::invalid_argument("need at least two horizons");

  std::vector<UpdateRule> rules;
  if (rule_name == "paper_literal")
    rules = {UpdateRule::kPaperLiteral};
  else if (rule_name == "importance_weighted")
    rules = {UpdateRule::kImportanceWeighted};
  else if (rule_name == "both")
    rules = {UpdateRule::kPaperLiteral, UpdateRule::kImportanceWeighted};
  else
    throw std::invalid_argument("unknown rule: " + rule_name);

  std::filesystem::create_directories(out_dir);
  const LipschitzBanditInstance instance =
      LipschitzBanditInstance::evenly_spaced(arms, lipschitz);

  json summary;
  summary["arms"] = arms;
  summary["lipschitz"] = lipschitz;
  summary["seeds"] = seeds;
  CsvWriter csv((std::filesystem::path(out_dir) / "regret.csv").string(),
                {"rule", "horizon", "seed", "R_S", "DE", "R", "epsilon"});
  for (UpdateRule rule : rules) {
    const std::string tag =
        rule == UpdateRule::kPaperLiteral ? "paper_literal" : "importance_weighted";
    const ScalingStudy study = scaling_study(instance, horizons, seeds, rule, 12345);
    json rows = json::array();
    for (const auto& row : study.rows) {
      for (int s = 0; s < seeds; ++s) {
        const RegretTrace trace = run_mesh_exp3(
            instance, row.horizon, row.epsilon, rule, Rng(12345).fork(
                (&row - study.rows.data()) * 100003 + s).seed());
        const RegretSummary reg = regret_and_de(trace);
        csv.write_row({tag, std::to_string(row.horizon), std::to_string(s),
                       format_double(reg.exp3_regret), format_double(reg.discretization_error),
                       format_double(reg.total_regret), format_double(row.epsilon)});
      }
      rows.push_back({{"horizon", row.horizon},
                      {"epsilon", row.epsilon},
                      {"mean_regret", row.mean_regret},
                      {"sd_regret", row.sd_regret}});
    }
    summary[tag] = {{"rows", rows}, {"loglog_slope", study.loglog_slope}};
  }
  std::ofstream out(std::filesystem::path(out_dir) / "summary.json");
  out << summary.dump(2) << '\n';
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_plot(const std::string& run_dir, bool csv_only) {
  const std::string run_csv = (std::filesystem::path(run_dir) / "run.csv").string();
  if (!std::filesystem::exists(run_csv))
    throw std::invalid_argument("missing run CSV: " + run_csv);
  const CsvTable table = read_csv(run_csv);
  if (csv_only) {
    std::cout << json{{"rows", table.rows.size()}, {"rendered", false}}.dump() << '\n';
    return 0;
  }

  std::vector<double> rounds;
  for (const auto& row : table.rows) rounds.push_back(std::stod(row[0]));

  // Task distribution columns p_0..p_{K-1}.
  std::vector<std::vector<double>> stacks;
  std::vector<std::string> labels;
  for (int k = 0;; ++k) {
    const int col = table.column("p_" + std::to_string(k));
    if (col < 0) break;
    std::vector<double> ys;
    for (const auto& row : table.rows) ys.push_back(std::stod(row[col]));
    stacks.push_back(std::move(ys));
    labels.push_back("task " + std::to_string(k));
  }
  render_stacked_area((std::filesystem::path(run_dir) / "task_distribution.png").string(),
                      "task sampling distribution", "round", rounds, stacks, labels);

  const int cov_col = table.column("target_coverage");
  const int ret_col = table.column("target_return");
  std::vector<DataSeries> series(2);
  series[0].label = "coverage";
  series[1].label = "return";
  double max_ret = 1e-9;
  for (const auto& row : table.rows) max_ret = std::max(max_ret, std::stod(row[ret_col]));
  for (const auto& row : table.rows) {
    series[0].x.push_back(std::stod(row[0]));
    series[0].y.push_back(std::stod(row[cov_col]));
    series[1].x.push_back(std::stod(row[0]));
    series[1].y.push_back(std::stod(row[ret_col]) / max_ret);
  }
  render_line_chart((std::filesystem::path(run_dir) / "coverage.png").string(),
                    "target task evaluation", "round", "coverage / scaled return", series);
  std::cout << json{{"rows", table.rows.size()}, {"rendered", true}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curriculum-learning laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_override, checkpoint_dir, dump_path, run_dir;
  std::string horizons_csv = "2500,10000,40000", rule_name = "both", out_dir = "out/regret";
  long seed_override = -1, rounds_override = -1, eval_seed = 7;
  int population = 0, episodes = 20, arms = 4, seeds = 20;
  double lipschitz = 1.0;
  bool csv_only = false;

  auto* train = app.add_subcommand("train", "run a full curriculum experiment");
  train->add_option("--config", config_path, "experiment config JSON")->required();
  train->add_option("--seed", seed_override, "override run.seed");
  train->add_option("--output", out_override, "override run.output_dir");
  train->add_option("--rounds", rounds_override, "override run.rounds");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a task");
  eval->add_option("--config", config_path, "experiment config JSON")->required();
  eval->add_option("--checkpoint", checkpoint_dir, "checkpoint directory")->required();
  eval->add_option("--population", population, "population size (default: config target)");
  eval->add_option("--episodes", episodes, "evaluation episodes");
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_option("--dump", dump_path, "write one greedy episode as JSON-lines");

  auto* bench = app.add_subcommand("regret-bench", "synthetic Lipschitz bandit studies");
  bench->add_option("--arms", arms, "arm count");
  bench->add_option("--lipschitz", lipschitz, "Lipschitz constant");
  bench->add_option("--horizons", horizons_csv, "comma-separated horizons");
  bench->add_option("--seeds", seeds, "seeds per horizon");
  bench->add_option("--rule", rule_name, "paper_literal | importance_weighted | both");
  bench->add_option("--out", out_dir, "output directory");

  auto* plot = app.add_subcommand("plot", "render figures from a run directory");
  plot->add_option("--run", run_dir, "run output directory")->required();
  plot->add_flag("--csv-only", csv_only, "skip rendering (headless CI)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << '\n';
    return 2;
  }

  try {
    if (*train) return cmd_train(config_path, seed_override, out_override, rounds_override);
    if (*eval) return cmd_eval(config_path, checkpoint_dir, population, episodes, eval_seed,
                               dump_path);
    if (*bench) return cmd_regret_bench(arms, lipschitz, horizons_csv, seeds, rule_name, out_dir);
    if (*plot) return cmd_plot(run_dir, csv_only);
  } catch (const std::invalid_argument& e) {
    return fail(2, e.what());
  } catch (const std::exception& e) {
    return fail(1, e.what());
  }
  return 2;
}
