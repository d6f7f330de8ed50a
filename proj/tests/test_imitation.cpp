#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "curricula/imitation.hpp"
#include "test_util.hpp"

using namespace curricula;
using curricula::testing::max_rel_grad_error;
using curricula::testing::random_matrix;

namespace {

ImitationConfig small_config(int obs_dim = 4, int hidden = 8) {
  ImitationConfig cfg;
  cfg.obs_dim = obs_dim;
  cfg.hidden = hidden;
  cfg.n_actions = 5;
  return cfg;
}

// Drifting observation stream with a state-dependent scripted action.
ImitationModel::Sequence scripted_sequence(Rng& rng, int len, int obs_dim,
                                           const std::function<int(const double*)>& act) {
  ImitationModel::Sequence seq;
  seq.observations = Matrix(len, obs_dim);
  std::vector<double> state(obs_dim);
  for (double& v : state) v = rng.uniform(-1, 1);
  for (int t = 0; t < len; ++t) {
    for (int d = 0; d < obs_dim; ++d) {
      state[d] += rng.uniform(-0.2, 0.2);
      seq.observations.at(t, d) = state[d];
    }
    seq.actions.push_back(act(state.data()));
  }
  return seq;
}

}  // namespace

TEST_CASE("forward unroll") {
  SUBCASE("length-1 sequence produces one hidden state and one logit row") {
    ImitationModel model(small_config(), 81);
    const auto un = model.forward(Matrix::zeros(1, 4));
    CHECK(un.hidden_states.rows == 1);
    CHECK(un.logits.rows == 1);
    CHECK(un.logits.cols == 5);
  }
  SUBCASE("zeroed parameters keep the hidden state at zero and the logits uniform") {
    ImitationModel model(small_config(), 82);
    for (int i = 0; i < model.params().count(); ++i)
      for (double& v : model.params().value(i).data) v = 0.0;
    Rng rng(83);
    const auto un = model.forward(random_matrix(rng, 6, 4));
    for (double h : un.hidden_states.data) CHECK(h == 0.0);
    for (double l : un.logits.data) CHECK(l == 0.0);
  }
  SUBCASE("width mismatch is a contract violation") {
    ImitationModel model(small_config(), 84);
    CHECK_THROWS_AS(model.forward(Matrix::zeros(3, 5)), std::invalid_argument);
    CHECK_THROWS_AS(model.forward(Matrix(0, 4)), std::invalid_argument);
  }
  SUBCASE("gradient through time matches finite differences on length-8 sequences") {
    ImitationModel model(small_config(3, 5), 85);
    Rng rng(86);
    // Give the head nonzero weights so its gradient path is exercised.
    for (double& v : model.params().value("head.W").data) v = rng.uniform(-0.3, 0.3);
    ImitationModel::Sequence seq;
    seq.observations = random_matrix(rng, 8, 3);
    for (int t = 0; t < 8; ++t) seq.actions.push_back(rng.uniform_int(5));
    // Rebuild the training loss on a fresh tape for the check.
    auto build = [&](Tape& t) -> ValueId {
      ValueId h = t.constant(Matrix::zeros(1, 5));
      ValueId total = -1;
      for (int step = 0; step < 8; ++step) {
        Matrix x(1, 3);
        for (int d = 0; d < 3; ++d) x.at(0, d) = seq.observations.at(step, d);
        const ValueId xc = t.constant(std::move(x));
        const ValueId z = t.sigmoid(t.add_row(
            t.add(t.matmul(xc, t.param("gru.Wz")), t.matmul(h, t.param("gru.Uz"))),
            t.param("gru.bz")));
        const ValueId r = t.sigmoid(t.add_row(
            t.add(t.matmul(xc, t.param("gru.Wr")), t.matmul(h, t.param("gru.Ur"))),
            t.param("gru.br")));
        const ValueId cand = t.tanh(t.add_row(
            t.add(t.matmul(xc, t.param("gru.Wh")), t.matmul(t.hadamard(r, h), t.param("gru.Uh"))),
            t.param("gru.bh")));
        h = t.add(t.hadamard(t.affine(z, -1.0, 1.0), h), t.hadamard(z, cand));
        const ValueId logits = t.add_row(t.matmul(h, t.param("head.W")), t.param("head.b"));
        const ValueId ll = t.sum_all(t.categorical_log_prob(logits, {seq.actions[step]}));
        total = total < 0 ? ll : t.add(total, ll);
      }
      return t.affine(total, -1.0 / 8.0, 0.0);
    };
    CHECK(max_rel_grad_error(model.params(), build) < 1e-4);
  }
}

TEST_CASE("training") {
  SUBCASE("initial loss is ln 5 for the zero-initialized head") {
    ImitationModel model(small_config(), 87);
    Rng rng(88);
    std::vector<ImitationModel::Sequence> data;
    for (int i = 0; i < 10; ++i)
      data.push_back(scripted_sequence(rng, 12, 4, [&](const double*) { return rng.uniform_int(5); }));
    CHECK(std::abs(model.dataset_loss(data) - std::log(5.0)) < 1e-3);
  }
  SUBCASE("loss trace is non-increasing at learning rate 1e-3 on a fixed dataset") {
    ImitationModel model(small_config(), 89);
    Rng rng(90);
    std::vector<ImitationModel::Sequence> data;
    for (int i = 0; i < 6; ++i)
      data.push_back(scripted_sequence(rng, 10, 4,
                                       [](const double* s) { return s[0] > 0 ? 1 : 2; }));
    Rng train_rng(91);
    const auto trace = model.train(data, 12, 1e-3, train_rng);
    for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
  }
  SUBCASE("a constant-action policy is imitated to >= 0.99 accuracy") {
    ImitationModel model(small_config(), 92);
    Rng rng(93);
    std::vector<ImitationModel::Sequence> data;
    for (int i = 0; i < 20; ++i)
      data.push_back(scripted_sequence(rng, 15, 4, [](const double*) { return 3; }));
    Rng train_rng(94);
    model.train(data, 60, 0.25, train_rng);
    CHECK(model.dataset_accuracy(data) >= 0.99);
  }
  SUBCASE("empty dataset is a contract violation") {
    ImitationModel model(small_config(), 95);
    Rng rng(96);
    std::vector<ImitationModel::Sequence> empty;
    CHECK_THROWS_AS(model.train(empty, 1, 0.1, rng), std::invalid_argument);
  }
  SUBCASE("training on policy A's data is independent of policy B's existence") {
    Rng rng(97);
    std::vector<ImitationModel::Sequence> data_a, data_b;
    for (int i = 0; i < 5; ++i) {
      data_a.push_back(scripted_sequence(rng, 8, 4, [](const double*) { return 0; }));
      data_b.push_back(scripted_sequence(rng, 8, 4, [](const double*) { return 4; }));
    }
    ImitationModel isolated(small_config(), 98);
    Rng r1(99);
    isolated.train(data_a, 5, 0.1, r1);
    ImitationModel with_neighbor(small_config(), 98);
    Rng r2(99);
    with_neighbor.train(data_a, 5, 0.1, r2);
    (void)data_b;  // present but never passed to the trainer
    CHECK(isolated.params().flatten() == with_neighbor.params().flatten());
  }
}

TEST_CASE("context extraction") {
  ImitationModel model(small_config(), 101);
  Rng rng(102);
  const Matrix traj = random_matrix(rng, 9, 4);
  SUBCASE("a single trajectory returns its final hidden state verbatim") {
    const auto ctx = model.extract_context({traj});
    const auto un = model.forward(traj);
    for (int j = 0; j < 8; ++j) CHECK(ctx[j] == un.hidden_states.at(8, j));
  }
  SUBCASE("averaging two identical trajectories changes nothing") {
    CHECK(model.extract_context({traj, traj}) == model.extract_context({traj}));
  }
  SUBCASE("the context is a deterministic function of parameters and trajectories") {
    CHECK(model.extract_context({traj}) == model.extract_context({traj}));
  }
  SUBCASE("no trajectories is a contract violation") {
    CHECK_THROWS_AS(model.extract_context({}), std::invalid_argument);
  }
}

TEST_CASE("contexts of behaviorally distinct policies separate linearly") {
  // Always-north vs always-east scripted behavior, 50 trajectories each; a
  // held-out linear probe must reach 95% accuracy on the extracted contexts.
  Rng rng(103);
  ImitationModel model(small_config(4, 8), 104);
  std::vector<ImitationModel::Sequence> all;
  std::vector<Matrix> trajectories;
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) {
    const int label = i % 2;
    // Observations drift in the direction the policy moves.
    ImitationModel::Sequence seq;
    seq.observations = Matrix(12, 4);
    double x = rng.uniform(-0.3, 0.3), y = rng.uniform(-0.3, 0.3);
    for (int t = 0; t < 12; ++t) {
      (label == 0 ? y : x) += 0.1;
      seq.observations.at(t, 0) = x + rng.uniform(-0.02, 0.02);
      seq.observations.at(t, 1) = y + rng.uniform(-0.02, 0.02);
      seq.observations.at(t, 2) = rng.uniform(-0.05, 0.05);
      seq.observations.at(t, 3) = 1.0;
      seq.actions.push_back(label == 0 ? 3 : 1);  // +y or +x
    }
    trajectories.push_back(seq.observations);
    labels.push_back(label);
    all.push_back(std::move(seq));
  }
  Rng train_rng(105);
  model.train(all, 30, 0.2, train_rng);

  std::vector<std::vector<double>> contexts;
  for (const auto& t : trajectories) contexts.push_back(model.extract_context({t}));

  // First half trains a perceptron-style linear probe (with bias), the held
  // out second half scores it; labels alternate so both halves are balanced.
  std::vector<double> w(9, 0.0);
  for (int epoch = 0; epoch < 200; ++epoch) {
    for (int i = 0; i < 50; ++i) {
      double score = w[8];
      for (int d = 0; d < 8; ++d) score += w[d] * contexts[i][d];
      const double target = labels[i] == 0 ? 1.0 : -1.0;
      if (score * target <= 0) {
        for (int d = 0; d < 8; ++d) w[d] += 0.1 * target * contexts[i][d];
        w[8] += 0.1 * target;
      }
    }
  }
  int correct = 0, total = 0;
  for (int i = 50; i < 100; ++i) {
    double score = w[8];
    for (int d = 0; d < 8; ++d) score += w[d] * contexts[i][d];
    const int predicted = score > 0 ? 0 : 1;
    correct += predicted == labels[i];
    ++total;
  }
  CHECK(static_cast<double>(correct) / total >= 0.95);
}
