#include "curricula/imitation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace curricula {

namespace {
Matrix scaled_uniform(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : m.data) v = rng.uniform(-scale, scale);
  return m;
}
}  // namespace

ImitationModel::ImitationModel(ImitationConfig config, uint64_t init_seed) : config_(config) {
  if (config.obs_dim <= 0 || config.hidden <= 0 || config.n_actions <= 1)
    throw std::invalid_argument("ImitationModel: bad configuration");
  Rng rng(init_seed);
  const int in = config.obs_dim, h = config.hidden;
  for (const char* gate : {"z", "r", "h"}) {
    params_.add(std::string("gru.W") + gate, scaled_uniform(rng, in, h));
    params_.add(std::string("gru.U") + gate, scaled_uniform(rng, h, h));
    params_.add(std::string("gru.b") + gate, Matrix::zeros(1, h));
  }
  // Zero head: an untrained model predicts the uniform distribution, so the
  // initial loss is exactly ln(n_actions).
  params_.add("head.W", Matrix::zeros(h, config.n_actions));
  params_.add("head.b", Matrix::zeros(1, config.n_actions));
}

ImitationModel::Unroll ImitationModel::forward(const Matrix& observations) const {
  if (observations.cols != config_.obs_dim)
    throw std::invalid_argument("ImitationModel::forward: observation width mismatch");
  if (observations.rows == 0)
    throw std::invalid_argument("ImitationModel::forward: empty sequence");
  const int t_len = observations.rows, h_dim = config_.hidden;

  const Matrix &wz = params_.value("gru.Wz"), &uz = params_.value("gru.Uz"),
               &bz = params_.value("gru.bz");
  const Matrix &wr = params_.value("gru.Wr"), &ur = params_.value("gru.Ur"),
               &br = params_.value("gru.br");
  const Matrix &wh = params_.value("gru.Wh"), &uh = params_.value("gru.Uh"),
               &bh = params_.value("gru.bh");

  Unroll out;
  out.hidden_states = Matrix(t_len, h_dim);
  Matrix h(1, h_dim);
  Matrix x(1, config_.obs_dim);
  Matrix xz, xr, xh, hz, hr, hh, rh(1, h_dim);
  for (int t = 0; t < t_len; ++t) {
    std::copy(&observations.data[static_cast<size_t>(t) * observations.cols],
              &observations.data[static_cast<size_t>(t + 1) * observations.cols], x.data.begin());
    matmul(x, wz, xz);
    matmul(h, uz, hz);
    matmul(x, wr, xr);
    matmul(h, ur, hr);
    Matrix z(1, h_dim), r(1, h_dim);
    for (int j = 0; j < h_dim; ++j) {
      z.at(0, j) = 1.0 / (1.0 + std::exp(-(xz.at(0, j) + hz.at(0, j) + bz.at(0, j))));
      r.at(0, j) = 1.0 / (1.0 + std::exp(-(xr.at(0, j) + hr.at(0, j) + br.at(0, j))));
      rh.at(0, j) = r.at(0, j) * h.at(0, j);
    }
    matmul(x, wh, xh);
    matmul(rh, uh, hh);
    for (int j = 0; j < h_dim; ++j) {
      const double cand = std::tanh(xh.at(0, j) + hh.at(0, j) + bh.at(0, j));
      h.at(0, j) = (1.0 - z.at(0, j)) * h.at(0, j) + z.at(0, j) * cand;
      out.hidden_states.at(t, j) = h.at(0, j);
    }
  }

  matmul(out.hidden_states, params_.value("head.W"), out.logits);
  const Matrix& hb = params_.value("head.b");
  for (int t = 0; t < t_len; ++t)
    for (int j = 0; j < out.logits.cols; ++j) out.logits.at(t, j) += hb.at(0, j);
  return out;
}

ValueId ImitationModel::batched_loss(Tape& tape, const std::vector<const Sequence*>& group) const {
  const int b = static_cast<int>(group.size());
  const int t_len = group[0]->observations.rows;
  const int h_dim = config_.hidden;

  const ValueId wz = tape.param("gru.Wz"), uz = tape.param("gru.Uz"), bz = tape.param("gru.bz");
  const ValueId wr = tape.param("gru.Wr"), ur = tape.param("gru.Ur"), br = tape.param("gru.br");
  const ValueId wh = tape.param("gru.Wh"), uh = tape.param("gru.Uh"), bh = tape.param("gru.bh");
  const ValueId head_w = tape.param("head.W"), head_b = tape.param("head.b");

  ValueId h = tape.constant(Matrix::zeros(b, h_dim));
  ValueId total = -1;
  for (int t = 0; t < t_len; ++t) {
    Matrix x(b, config_.obs_dim);
    std::vector<int> actions(b);
    for (int i = 0; i < b; ++i) {
      for (int d = 0; d < config_.obs_dim; ++d) x.at(i, d) = group[i]->observations.at(t, d);
      actions[i] = group[i]->actions[t];
    }
    const ValueId xc = tape.constant(std::move(x));
    const ValueId z =
        tape.sigmoid(tape.add_row(tape.add(tape.matmul(xc, wz), tape.matmul(h, uz)), bz));
    const ValueId r =
        tape.sigmoid(tape.add_row(tape.add(tape.matmul(xc, wr), tape.matmul(h, ur)), br));
    const ValueId cand = tape.tanh(
        tape.add_row(tape.add(tape.matmul(xc, wh), tape.matmul(tape.hadamard(r, h), uh)), bh));
    h = tape.add(tape.hadamard(tape.affine(z, -1.0, 1.0), h), tape.hadamard(z, cand));

    const ValueId logits = tape.add_row(tape.matmul(h, head_w), head_b);
    const ValueId step_ll = tape.sum_all(tape.categorical_log_prob(logits, actions));
    total = total < 0 ? step_ll : tape.add(total, step_ll);
  }
  return tape.affine(total, -1.0 / (static_cast<double>(b) * t_len), 0.0);
}

std::vector<double> ImitationModel::train(const std::vector<Sequence>& data, int epochs,
                                          double learning_rate, Rng& rng) {
  if (data.empty()) throw std::invalid_argument("ImitationModel::train: empty dataset");
  for (const auto& seq : data) {
    if (seq.observations.rows == 0 ||
        seq.observations.rows != static_cast<int>(seq.actions.size()))
      throw std::invalid_argument("ImitationModel::train: misaligned sequence");
  }

  // Bucket by length so each minibatch unrolls as one batch.
  std::map<int, std::vector<const Sequence*>> buckets;
  for (const auto& seq : data) buckets[seq.observations.rows].push_back(&seq);

  constexpr int kMinibatch = 32;
  std::vector<double> trace;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (auto& [len, group] : buckets) {
      (void)len;
      for (int i = static_cast<int>(group.size()) - 1; i > 0; --i)
        std::swap(group[i], group[rng.uniform_int(i + 1)]);
      for (size_t start = 0; start < group.size(); start += kMinibatch) {
        const size_t end = std::min(group.size(), start + kMinibatch);
        const std::vector<const Sequence*> minibatch(group.begin() + start, group.begin() + end);
        Tape tape(&params_);
        const ValueId loss = batched_loss(tape, minibatch);
        params_.zero_grads();
        tape.backward(loss);
        if (config_.adam)
          params_.adam_step(learning_rate);
        else
          params_.sgd_step(learning_rate);
      }
    }
    trace.push_back(dataset_loss(data));
  }
  return trace;
}

double ImitationModel::dataset_loss(const std::vector<Sequence>& data) const {
  double total = 0.0;
  long steps = 0;
  for (const auto& seq : data) {
    const Unroll un = forward(seq.observations);
    for (int t = 0; t < un.logits.rows; ++t) {
      double mx = un.logits.at(t, 0);
      for (int j = 1; j < un.logits.cols; ++j) mx = std::max(mx, un.logits.at(t, j));
      double sum = 0.0;
      for (int j = 0; j < un.logits.cols; ++j) sum += std::exp(un.logits.at(t, j) - mx);
      total -= un.logits.at(t, seq.actions[t]) - mx - std::log(sum);
      ++steps;
    }
  }
  return steps > 0 ? total / static_cast<double>(steps) : 0.0;
}

double ImitationModel::dataset_accuracy(const std::vector<Sequence>& data) const {
  long correct = 0, steps = 0;
  for (const auto& seq : data) {
    const Unroll un = forward(seq.observations);
    for (int t = 0; t < un.logits.rows; ++t) {
      int best = 0;
      for (int j = 1; j < un.logits.cols; ++j)
        if (un.logits.at(t, j) > un.logits.at(t, best)) best = j;
      if (best == seq.actions[t]) ++correct;
      ++steps;
    }
  }
  return steps > 0 ? static_cast<double>(correct) / static_cast<double>(steps) : 0.0;
}

std::vector<double> ImitationModel::extract_context(const std::vector<Matrix>& trajectories) const {
  if (trajectories.empty())
    throw std::invalid_argument("extract_context: need at least one trajectory");
  std::vector<double> ctx(config_.hidden, 0.0);
  for (const Matrix& traj : trajectories) {
    const Unroll un = forward(traj);
    const int last = un.hidden_states.rows - 1;
    for (int j = 0; j < config_.hidden; ++j) ctx[j] += un.hidden_states.at(last, j);
  }
  for (double& v : ctx) v /= static_cast<double>(trajectories.size());
  return ctx;
}

}  // namespace curricula
