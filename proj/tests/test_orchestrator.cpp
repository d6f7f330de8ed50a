#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "curricula/orchestrator.hpp"

using namespace curricula;

namespace {

ExperimentConfig tiny_config(uint64_t seed, const std::string& out = "") {
  ExperimentConfig cfg;
  cfg.populations = {2};
  cfg.target_population = 2;
  cfg.max_steps = 10;
  cfg.rounds = 3;
  cfg.seed = seed;
  cfg.output_dir = out;
  cfg.train_episodes = 2;
  cfg.eval_episodes = 2;
  cfg.student.d_m = 8;
  cfg.student.hidden = 8;
  cfg.student.interval = 5;
  cfg.imitation.hidden = 8;
  cfg.imitation_epochs = 1;
  cfg.imitation_window = 200;
  cfg.student.obs_dim = cfg.observation_dim();
  cfg.imitation.obs_dim = cfg.observation_dim();
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("curricula_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("estimate_objective") {
  SUBCASE("q = p reduces to the direct expectation with unit weights") {
    const std::vector<double> q = {0.25, 0.25, 0.5};
    const std::vector<double> v = {1.0, 2.0, 4.0};
    CHECK(estimate_objective(q, q, v) == doctest::Approx(0.25 + 0.5 + 2.0).epsilon(1e-12));
  }
  SUBCASE("a point-mass target reads off that task's value") {
    const std::vector<double> q = {0.5, 0.3, 0.2};
    const std::vector<double> p = {0.0, 1.0, 0.0};
    const std::vector<double> v = {9.0, 3.5, 7.0};
    CHECK(estimate_objective(q, p, v) == doctest::Approx(3.5).epsilon(1e-12));
  }
  SUBCASE("importance-weighted form equals the direct sum on random triples") {
    Rng rng(201);
    for (int trial = 0; trial < 100; ++trial) {
      const int k = 2 + rng.uniform_int(5);
      std::vector<double> q(k), p(k), v(k);
      double qs = 0, ps = 0;
      for (int i = 0; i < k; ++i) {
        q[i] = 0.05 + rng.uniform();
        p[i] = 0.05 + rng.uniform();
        v[i] = rng.uniform(-5, 5);
        qs += q[i];
        ps += p[i];
      }
      for (int i = 0; i < k; ++i) {
        q[i] /= qs;
        p[i] /= ps;
      }
      double direct = 0;
      for (int i = 0; i < k; ++i) direct += p[i] * v[i];
      CHECK(std::abs(estimate_objective(q, p, v) - direct) < 1e-12);
    }
  }
  SUBCASE("support violations are flagged") {
    bool violated = false;
    estimate_objective({1.0, 0.0}, {0.0, 1.0}, {1.0, 2.0}, &violated);
    CHECK(violated);
    violated = true;
    estimate_objective({0.5, 0.5}, {0.0, 1.0}, {1.0, 2.0}, &violated);
    CHECK_FALSE(violated);
  }
}

TEST_CASE("evaluate_target") {
  const std::vector<int> allowed = {2, 4};
  const TaskSpec task{EnvFamily::kSimpleSpread, 2, 25, 0};
  const PhysicsConfig phys;

  SUBCASE("a do-nothing policy on a never-completing layout earns zero") {
    StudentConfig cfg;
    cfg.obs_dim = ParticleEnv::observation_dim(EnvFamily::kSimpleSpread, phys.entity_slots);
    cfg.d_m = 8;
    cfg.hidden = 8;
    // Zero-initialized heads + greedy argmax = the no-op action everywhere.
    StudentPolicy policy(cfg, 202);
    const auto res = evaluate_target(policy, task, phys, allowed, 4, 0.99, 7);
    CHECK(res.mean_discounted_return == 0.0);
    CHECK(res.mean_coverage == 0.0);
  }

  SUBCASE("a scripted landmark-seeking controller completes some layout") {
    // Independent oracle: greedy bang-bang control toward the nearest
    // uncovered landmark must finish an n=2 episode on one of the first
    // fifty seeds, with positive discounted return and full coverage.
    bool completed = false;
    for (uint64_t seed = 0; seed < 50 && !completed; ++seed) {
      ParticleEnv env = make_task(task, phys, allowed);
      env.reset(seed);
      double discounted = 0.0, pow = 1.0;
      for (int t = 0; t < task.max_steps; ++t) {
        std::vector<int> actions;
        for (size_t j = 0; j < 2; ++j) {
          const auto& me = env.state().agent_pos[j];
          const auto& lm = env.state().landmark_pos[j];
          const double dx = lm[0] - me[0], dy = lm[1] - me[1];
          int act = 0;
          if (std::hypot(dx, dy) > 0.05)
            act = std::abs(dx) > std::abs(dy) ? (dx > 0 ? 1 : 2) : (dy > 0 ? 3 : 4);
          actions.push_back(act);
        }
        const auto out = env.step(actions);
        discounted += pow * out.shared_reward;
        pow *= 0.99;
        if (out.done) {
          if (out.coverage == 1.0 && discounted > 0.0) completed = true;
          break;
        }
      }
    }
    CHECK(completed);
  }

  SUBCASE("doubling the episode count shrinks the standard error roughly by sqrt(2)") {
    StudentConfig cfg;
    cfg.obs_dim = ParticleEnv::observation_dim(EnvFamily::kSimpleSpread, phys.entity_slots);
    cfg.d_m = 8;
    cfg.hidden = 8;
    const TaskSpec crowded{EnvFamily::kSimpleSpread, 4, 25, 0};
    auto se_of = [&](int episodes, int reps) {
      std::vector<double> means;
      for (int r = 0; r < reps; ++r) {
        const auto res = evaluate_random_policy(cfg, crowded, phys, allowed, episodes, 0.99,
                                                10000 + r * 1000);
        means.push_back(res.mean_discounted_return);
      }
      double mu = 0;
      for (double m : means) mu += m;
      mu /= means.size();
      double var = 0;
      for (double m : means) var += (m - mu) * (m - mu);
      return std::sqrt(var / (means.size() - 1));
    };
    const double se_small = se_of(8, 200);
    const double se_large = se_of(16, 200);
    REQUIRE(se_small > 0.0);
    const double ratio = se_large / se_small;
    CHECK(ratio > 0.6);
    CHECK(ratio < 0.85);
  }
}

TEST_CASE("curriculum run") {
  SUBCASE("round 0 logs a near-uniform task distribution") {
    ExperimentConfig cfg = tiny_config(11);
    cfg.populations = {2, 4, 8, 16};
    cfg.target_population = 4;
    cfg.student.obs_dim = cfg.observation_dim();
    CurriculumRun run(cfg, "");
    const RoundRecord rec = run.run_round();
    double lo = 1.0, hi = 0.0;
    for (double p : rec.task_distribution) {
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    CHECK(hi - lo < 0.01);
    CHECK(rec.round == 0);
  }

  SUBCASE("identical config and seed give byte-identical logs") {
    const auto dir_a = fresh_dir("det_a");
    const auto dir_b = fresh_dir("det_b");
    {
      CurriculumRun a(tiny_config(21, dir_a.string()), dir_a.string());
      a.run_all();
      CurriculumRun b(tiny_config(21, dir_b.string()), dir_b.string());
      b.run_all();
    }
    CHECK(slurp(dir_a / "run.csv") == slurp(dir_b / "run.csv"));
    CHECK(slurp(dir_a / "metrics.csv") == slurp(dir_b / "metrics.csv"));
    CHECK(slurp(dir_a / "contexts.csv") == slurp(dir_b / "contexts.csv"));
    CHECK(slurp(dir_a / "run.csv").find("\r") == std::string::npos);
    // One record per round, no gaps.
    const CsvTable table = read_csv((dir_a / "run.csv").string());
    REQUIRE(table.rows.size() == 3);
    for (size_t r = 0; r < table.rows.size(); ++r)
      CHECK(table.rows[r][0] == std::to_string(r));
  }

  SUBCASE("checkpoint round-trip reproduces evaluation exactly") {
    const auto dir = fresh_dir("ckpt");
    ExperimentConfig cfg = tiny_config(31);
    CurriculumRun run(cfg, "");
    run.run_round();
    run.run_round();
    run.save(dir.string());

    const auto before = evaluate_target(run.policy(), cfg.target_task(), cfg.physics,
                                        cfg.populations, 4, 0.99, 99);

    CurriculumRun restored(tiny_config(31), "");
    restored.load(dir.string());
    CHECK(restored.rounds_completed() == 2);
    const auto after = evaluate_target(restored.policy(), cfg.target_task(), cfg.physics,
                                       cfg.populations, 4, 0.99, 99);
    CHECK(before.mean_discounted_return == after.mean_discounted_return);
    CHECK(before.mean_coverage == after.mean_coverage);
    CHECK(run.policy().params().flatten() == restored.policy().params().flatten());
  }

  SUBCASE("distribution rows sum to one") {
    ExperimentConfig cfg = tiny_config(41);
    CurriculumRun run(cfg, "");
    for (int r = 0; r < 2; ++r) {
      const auto rec = run.run_round();
      double sum = 0.0;
      for (double p : rec.task_distribution) sum += p;
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("config parsing") {
  nlohmann::json doc = experiment_config_to_json(tiny_config(5));
  SUBCASE("round-trips through JSON") {
    const ExperimentConfig cfg = parse_experiment_config(doc);
    CHECK(cfg.populations == std::vector<int>{2});
    CHECK(cfg.max_steps == 10);
    CHECK(cfg.student.d_m == 8);
  }
  SUBCASE("unknown keys are rejected") {
    nlohmann::json bad = doc;
    bad["task_space"]["typo_key"] = 1;
    CHECK_THROWS_AS(parse_experiment_config(bad), std::invalid_argument);
    nlohmann::json bad2 = doc;
    bad2["unknown_block"] = nlohmann::json::object();
    CHECK_THROWS_AS(parse_experiment_config(bad2), std::invalid_argument);
  }
  SUBCASE("missing blocks are rejected") {
    nlohmann::json bad = doc;
    bad.erase("trainer");
    CHECK_THROWS_AS(parse_experiment_config(bad), std::invalid_argument);
  }
  SUBCASE("the target population must be in or beyond the training list") {
    nlohmann::json bad = doc;
    bad["task_space"]["populations"] = {2, 8};
    bad["task_space"]["target_population"] = 4;
    CHECK_THROWS_AS(parse_experiment_config(bad), std::invalid_argument);
    nlohmann::json beyond = doc;
    beyond["task_space"]["populations"] = {2, 8};
    beyond["task_space"]["target_population"] = 16;
    const ExperimentConfig cfg = parse_experiment_config(beyond);
    CHECK(cfg.target_task().task_id == -1);
  }
}
