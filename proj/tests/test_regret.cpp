#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "curricula/regret.hpp"

using namespace curricula;

TEST_CASE("instance construction verifies the Lipschitz property on a fine grid") {
  const auto inst = LipschitzBanditInstance::evenly_spaced(4, 1.0);
  // Exact check over every arm and 10,001-point grid pairs.
  for (int a = 0; a < 4; ++a)
    for (int i = 1; i <= 10000; ++i) {
      const double x0 = (i - 1) / 10000.0, x1 = i / 10000.0;
      CHECK(std::abs(inst.mean_reward(a, x1) - inst.mean_reward(a, x0)) <=
            inst.lipschitz * (x1 - x0) + 1e-12);
    }
  Rng rng(31);
  for (int t = 0; t < 5; ++t) LipschitzBanditInstance::random_anchors(3, 2.0, rng);
}

TEST_CASE("discretized best response") {
  SUBCASE("a single arm is optimal everywhere") {
    const auto inst = LipschitzBanditInstance::evenly_spaced(1, 1.0);
    const MeshGrid grid(0.25);
    for (double x : {0.0, 0.1, 0.5, 0.99})
      CHECK(discretized_best_response_at(inst, grid, x) == 0);
  }
  SUBCASE("two tents anchored at the ends, eps = 0.5: boundary tie goes to arm 0") {
    LipschitzBanditInstance inst;
    inst.arm_count = 2;
    inst.lipschitz = 1.0;
    inst.anchors = {0.0, 1.0};
    inst.verify_lipschitz();
    const MeshGrid grid(0.5);
    REQUIRE(grid.point_count() == 3);
    const auto table = discretized_best_response(inst, grid);
    CHECK(table[0] == 0);  // r0(0)=1 > r1(0)=0
    CHECK(table[1] == 0);  // r0(0.5)=0.5 == r1(0.5): tie to the lower index
    CHECK(table[2] == 1);
    CHECK(discretized_best_response_at(inst, grid, 0.6) == 0);   // maps to mesh 0.5
    CHECK(discretized_best_response_at(inst, grid, 0.80) == 1);  // maps to mesh 1.0
  }
  SUBCASE("a fine grid agrees with the exact best response away from boundaries") {
    const auto inst = LipschitzBanditInstance::evenly_spaced(4, 1.0);
    const MeshGrid grid(1e-4);
    int disagreements = 0;
    const int scan = 20001;
    for (int i = 0; i < scan; ++i) {
      const double x = i / static_cast<double>(scan - 1);
      if (discretized_best_response_at(inst, grid, x) != inst.best_arm(x)) ++disagreements;
    }
    // Disagreement only within ~eps of the K-1 decision boundaries.
    CHECK(disagreements <= 3 * 4);
  }
}

TEST_CASE("run_mesh_exp3 and the regret decomposition") {
  SUBCASE("one arm: zero regret and zero discretization error, exactly") {
    const auto inst = LipschitzBanditInstance::evenly_spaced(1, 1.0);
    const auto trace = run_mesh_exp3(inst, 2000, 0.25, UpdateRule::kPaperLiteral, 7);
    const auto sum = regret_and_de(trace);
    CHECK(sum.exp3_regret == 0.0);
    CHECK(sum.discretization_error == 0.0);
    CHECK(sum.total_regret == 0.0);
  }
  SUBCASE("identical arms: every policy is optimal, total regret exactly zero") {
    LipschitzBanditInstance inst;
    inst.arm_count = 3;
    inst.lipschitz = 1.0;
    inst.anchors = {0.5, 0.5, 0.5};
    inst.verify_lipschitz();
    const auto trace = run_mesh_exp3(inst, 2000, 0.3, UpdateRule::kImportanceWeighted, 8);
    const auto sum = regret_and_de(trace);
    CHECK(sum.total_regret == 0.0);
    CHECK(sum.discretization_error == 0.0);
  }
  SUBCASE("DE <= eps * L * T exactly, and R = R_S + DE to 1e-9, on 100 random instances") {
    Rng rng(32);
    for (int trial = 0; trial < 100; ++trial) {
      const int arms = 2 + rng.uniform_int(4);
      const double lipschitz = 0.5 + 2.0 * rng.uniform();
      const auto inst = LipschitzBanditInstance::random_anchors(arms, lipschitz, rng);
      const long horizon = 500;
      const double eps = 0.05 + 0.4 * rng.uniform();
      const auto trace =
          run_mesh_exp3(inst, horizon, eps, UpdateRule::kPaperLiteral, 100 + trial);
      const auto sum = regret_and_de(trace);
      CHECK(sum.discretization_error <= eps * lipschitz * horizon);
      CHECK(sum.discretization_error >= 0.0);
      CHECK(std::abs(sum.total_regret - (sum.exp3_regret + sum.discretization_error)) <= 1e-9);
      // Pointwise ordering of the reward columns.
      for (size_t t = 0; t < trace.realized.size(); ++t)
        CHECK(trace.best_response[t] >= trace.discretized_best[t] - 1e-15);
    }
  }
  SUBCASE("traces are reproducible bit-for-bit from the seed") {
    const auto inst = LipschitzBanditInstance::evenly_spaced(4, 1.0);
    const auto a = run_mesh_exp3(inst, 3000, 0.2, UpdateRule::kImportanceWeighted, 55);
    const auto b = run_mesh_exp3(inst, 3000, 0.2, UpdateRule::kImportanceWeighted, 55);
    CHECK(a.realized == b.realized);
    CHECK(a.best_response == b.best_response);
    CHECK(a.discretized_best == b.discretized_best);
  }
}

TEST_CASE("scaling study machinery") {
  const auto inst = LipschitzBanditInstance::evenly_spaced(4, 1.0);
  SUBCASE("per-horizon epsilon comes from the cube-root rule and regret is sublinear") {
    const auto study =
        scaling_study(inst, {1000, 4000}, 6, UpdateRule::kImportanceWeighted, 99, true);
    REQUIRE(study.rows.size() == 2);
    CHECK(study.rows[0].epsilon == doctest::Approx(epsilon_star(4, 1000, 1.0)));
    CHECK(study.rows[1].epsilon == doctest::Approx(epsilon_star(4, 4000, 1.0)));
    // regret(T)/T should shrink with T.
    CHECK(study.rows[1].mean_regret / 4000.0 < study.rows[0].mean_regret / 1000.0);
    CHECK(study.loglog_slope < 1.0);
    CHECK(study.loglog_slope > 0.0);
  }
  SUBCASE("seed parallelism does not change the result") {
    const auto serial = scaling_study(inst, {500, 2000}, 4, UpdateRule::kPaperLiteral, 7, false);
    const auto parallel = scaling_study(inst, {500, 2000}, 4, UpdateRule::kPaperLiteral, 7, true);
    for (size_t i = 0; i < serial.rows.size(); ++i)
      CHECK(serial.rows[i].per_seed == parallel.rows[i].per_seed);
  }
}

TEST_CASE("finite-context harness gives per-context sublinear regret curves") {
  const std::vector<std::vector<double>> means = {
      {0.9, 0.3, 0.3}, {0.3, 0.9, 0.3}, {0.3, 0.3, 0.9}};
  int passes = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const auto curves =
        run_finite_context_exp3(means, 30000, UpdateRule::kImportanceWeighted, 500 + seed);
    bool ok = true;
    for (const auto& curve : curves) {
      const size_t n = curve.size();
      const double first_decile = curve[n / 10];
      const double final_decile = curve[n - 1] - curve[n - 1 - n / 10];
      if (!(final_decile < first_decile)) ok = false;
    }
    if (ok) ++passes;
  }
  CHECK(passes >= 9);
}
