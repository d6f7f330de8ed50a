#include "curricula/student.hpp"

#include <cmath>
#include <stdexcept>

namespace curricula {

namespace {

Matrix scaled_uniform(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : m.data) v = rng.uniform(-scale, scale);
  return m;
}

void softmax_row(std::span<const double> logits, std::vector<double>& probs,
                 std::vector<double>& log_probs) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  probs.resize(logits.size());
  log_probs.resize(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  const double lse = mx + std::log(sum);
  for (size_t i = 0; i < logits.size(); ++i) {
    probs[i] /= sum;
    log_probs[i] = logits[i] - lse;
  }
}

int argmax(std::span<const double> v) {
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * ln(2*pi)
constexpr double kSquashEps = 1e-6;

}  // namespace

StudentPolicy::StudentPolicy(StudentConfig config, uint64_t init_seed) : config_(config) {
  if (config.obs_dim <= 0) throw std::invalid_argument("StudentPolicy: obs_dim must be positive");
  if (config.heads < 1 || config.d_m % config.heads != 0)
    throw std::invalid_argument("StudentPolicy: heads must divide d_m");
  if (config.interval < 1) throw std::invalid_argument("StudentPolicy: interval must be >= 1");

  Rng rng(init_seed);
  // Hidden layers get scaled-uniform init; output heads start at zero so
  // fresh policies act uniformly at random.
  params_.add("comm.encoder", scaled_uniform(rng, config.obs_dim, config.d_m));
  params_.add("comm.encoder_bias", Matrix::zeros(1, config.d_m));
  params_.add("comm.WQ", scaled_uniform(rng, config.d_m, config.d_m));
  params_.add("comm.WK", scaled_uniform(rng, config.d_m, config.d_m));
  params_.add("comm.WV", scaled_uniform(rng, config.d_m, config.d_m));

  const int high_in = config.obs_dim + config.d_m;
  params_.add("high.W1", scaled_uniform(rng, high_in, config.hidden));
  params_.add("high.b1", Matrix::zeros(1, config.hidden));
  params_.add("high.policy", Matrix::zeros(config.hidden, config.d_skill));
  params_.add("high.policy_bias", Matrix::zeros(1, config.d_skill));
  params_.add("high.value", Matrix::zeros(config.hidden, 1));
  params_.add("high.value_bias", Matrix::zeros(1, 1));
  if (config.skill_mode == SkillMode::kContinuous)
    params_.add("high.log_std", Matrix::zeros(1, config.d_skill));

  const int low_in = config.obs_dim + config.d_skill;
  params_.add("low.W1", scaled_uniform(rng, low_in, config.hidden));
  params_.add("low.b1", Matrix::zeros(1, config.hidden));
  params_.add("low.policy", Matrix::zeros(config.hidden, config.n_actions));
  params_.add("low.policy_bias", Matrix::zeros(1, config.n_actions));
  params_.add("low.value", Matrix::zeros(config.hidden, 1));
  params_.add("low.value_bias", Matrix::zeros(1, 1));
}

void StudentPolicy::randomize(Rng& rng, double scale) {
  for (int i = 0; i < params_.count(); ++i)
    for (double& v : params_.value(i).data) v = rng.uniform(-scale, scale);
}

std::vector<double> StudentPolicy::encode(std::span<const double> obs) const {
  if (static_cast<int>(obs.size()) != config_.obs_dim)
    throw std::invalid_argument("encode: observation width mismatch");
  Matrix row(1, config_.obs_dim);
  std::copy(obs.begin(), obs.end(), row.data.begin());
  Matrix msg = encode_all(row);
  return msg.data;
}

Matrix StudentPolicy::encode_all(const Matrix& team_obs) const {
  if (team_obs.cols != config_.obs_dim)
    throw std::invalid_argument("encode_all: observation width mismatch");
  Matrix msg = matmul(team_obs, params_.value("comm.encoder"));
  const Matrix& bias = params_.value("comm.encoder_bias");
  for (int i = 0; i < msg.rows; ++i)
    for (int j = 0; j < msg.cols; ++j) msg.at(i, j) += bias.at(0, j);
  return msg;
}

Matrix StudentPolicy::attention(const Matrix& q, const Matrix& k, const Matrix& v) const {
  const int d_head = config_.d_m / config_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_head));
  Matrix out(q.rows, q.cols);
  Matrix scores, weights;
  for (int h = 0; h < config_.heads; ++h) {
    const int off = h * d_head;
    Matrix qh(q.rows, d_head), kh(q.rows, d_head), vh(q.rows, d_head);
    for (int i = 0; i < q.rows; ++i)
      for (int j = 0; j < d_head; ++j) {
        qh.at(i, j) = q.at(i, off + j);
        kh.at(i, j) = k.at(i, off + j);
        vh.at(i, j) = v.at(i, off + j);
      }
    matmul_nt(qh, kh, scores);
    for (double& s : scores.data) s *= scale;
    rowwise_softmax_inplace(scores, weights);
    Matrix mixed = matmul(weights, vh);
    for (int i = 0; i < q.rows; ++i)
      for (int j = 0; j < d_head; ++j) out.at(i, off + j) = mixed.at(i, j);
  }
  return out;
}

Matrix StudentPolicy::channel(const Matrix& messages) const {
  if (messages.cols != config_.d_m) throw std::invalid_argument("channel: message width mismatch");
  if (messages.rows < 1) throw std::invalid_argument("channel: need at least one agent");
  const Matrix q = matmul(messages, params_.value("comm.WQ"));
  const Matrix k = matmul(messages, params_.value("comm.WK"));
  const Matrix v = matmul(messages, params_.value("comm.WV"));
  return attention(q, k, v);
}

StudentPolicy::HighResult StudentPolicy::high_step(std::span<const double> obs,
                                                   std::span<const double> message, Rng& rng,
                                                   bool greedy) const {
  if (static_cast<int>(obs.size()) != config_.obs_dim ||
      static_cast<int>(message.size()) != config_.d_m)
    throw std::invalid_argument("high_step: input width mismatch");

  Matrix in(1, config_.obs_dim + config_.d_m);
  std::copy(obs.begin(), obs.end(), in.data.begin());
  std::copy(message.begin(), message.end(), in.data.begin() + config_.obs_dim);

  Matrix h = matmul(in, params_.value("high.W1"));
  const Matrix& b1 = params_.value("high.b1");
  for (int j = 0; j < h.cols; ++j) h.at(0, j) = std::tanh(h.at(0, j) + b1.at(0, j));

  Matrix head = matmul(h, params_.value("high.policy"));
  const Matrix& pb = params_.value("high.policy_bias");
  for (int j = 0; j < head.cols; ++j) head.at(0, j) += pb.at(0, j);

  Matrix val = matmul(h, params_.value("high.value"));
  HighResult res;
  res.value = val.at(0, 0) + params_.value("high.value_bias").at(0, 0);
  res.skill.mode = config_.skill_mode;

  if (config_.skill_mode == SkillMode::kDiscrete) {
    std::vector<double> probs, log_probs;
    softmax_row(head.data, probs, log_probs);
    const int option = greedy ? argmax(probs) : rng.categorical(probs);
    res.skill.option = option;
    res.skill.value.assign(config_.d_skill, 0.0);
    res.skill.value[option] = 1.0;
    res.log_prob = log_probs[option];
    res.dist_info = log_probs;
  } else {
    const Matrix& log_std = params_.value("high.log_std");
    res.skill.pre_squash.resize(config_.d_skill);
    res.skill.value.resize(config_.d_skill);
    res.log_prob = 0.0;
    res.dist_info.resize(2 * config_.d_skill);
    for (int j = 0; j < config_.d_skill; ++j) {
      const double mu = head.at(0, j);
      const double sigma = std::exp(log_std.at(0, j));
      const double z = greedy ? mu : mu + sigma * rng.normal();
      const double a = std::tanh(z);
      res.skill.pre_squash[j] = z;
      res.skill.value[j] = a;
      const double u = (z - mu) / sigma;
      res.log_prob += -0.5 * u * u - log_std.at(0, j) - kHalfLog2Pi -
                      std::log(1.0 - a * a + kSquashEps);
      res.dist_info[j] = mu;
      res.dist_info[config_.d_skill + j] = log_std.at(0, j);
    }
  }
  return res;
}

StudentPolicy::LowResult StudentPolicy::low_step(std::span<const double> obs,
                                                 const SkillAction& skill, Rng& rng,
                                                 bool greedy) const {
  if (static_cast<int>(obs.size()) != config_.obs_dim ||
      static_cast<int>(skill.value.size()) != config_.d_skill)
    throw std::invalid_argument("low_step: input width mismatch");

  Matrix in(1, config_.obs_dim + config_.d_skill);
  std::copy(obs.begin(), obs.end(), in.data.begin());
  std::copy(skill.value.begin(), skill.value.end(), in.data.begin() + config_.obs_dim);

  Matrix h = matmul(in, params_.value("low.W1"));
  const Matrix& b1 = params_.value("low.b1");
  for (int j = 0; j < h.cols; ++j) h.at(0, j) = std::tanh(h.at(0, j) + b1.at(0, j));

  Matrix logits = matmul(h, params_.value("low.policy"));
  const Matrix& pb = params_.value("low.policy_bias");
  for (int j = 0; j < logits.cols; ++j) logits.at(0, j) += pb.at(0, j);

  std::vector<double> probs, log_probs;
  softmax_row(logits.data, probs, log_probs);

  LowResult res;
  res.action = greedy ? argmax(probs) : rng.categorical(probs);
  res.log_prob = log_probs[res.action];
  res.log_probs = std::move(log_probs);
  Matrix val = matmul(h, params_.value("low.value"));
  res.value = val.at(0, 0) + params_.value("low.value_bias").at(0, 0);
  return res;
}

StudentPolicy::TapeHeads StudentPolicy::low_forward(Tape& tape, ValueId obs_and_skill) const {
  const ValueId h = tape.tanh(
      tape.add_row(tape.matmul(obs_and_skill, tape.param("low.W1")), tape.param("low.b1")));
  TapeHeads out;
  out.policy_out =
      tape.add_row(tape.matmul(h, tape.param("low.policy")), tape.param("low.policy_bias"));
  out.value = tape.add_row(tape.matmul(h, tape.param("low.value")), tape.param("low.value_bias"));
  return out;
}

ValueId StudentPolicy::channel_forward(Tape& tape, ValueId messages) const {
  const int d_head = config_.d_m / config_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_head));
  const ValueId q = tape.matmul(messages, tape.param("comm.WQ"));
  const ValueId k = tape.matmul(messages, tape.param("comm.WK"));
  const ValueId v = tape.matmul(messages, tape.param("comm.WV"));
  ValueId out = -1;
  for (int h = 0; h < config_.heads; ++h) {
    const int off = h * d_head;
    const ValueId qh = config_.heads == 1 ? q : tape.slice_cols(q, off, d_head);
    const ValueId kh = config_.heads == 1 ? k : tape.slice_cols(k, off, d_head);
    const ValueId vh = config_.heads == 1 ? v : tape.slice_cols(v, off, d_head);
    const ValueId scores = tape.affine(tape.matmul_nt(qh, kh), scale, 0.0);
    const ValueId weights = tape.rowwise_softmax(scores);
    const ValueId mixed = tape.matmul(weights, vh);
    out = h == 0 ? mixed : tape.concat_cols(out, mixed);
  }
  return out;
}

StudentPolicy::TapeHeads StudentPolicy::high_forward(Tape& tape, ValueId team_obs) const {
  const ValueId messages =
      tape.add_row(tape.matmul(team_obs, tape.param("comm.encoder")), tape.param("comm.encoder_bias"));
  const ValueId mixed = channel_forward(tape, messages);
  const ValueId joint = tape.concat_cols(team_obs, mixed);
  const ValueId h =
      tape.tanh(tape.add_row(tape.matmul(joint, tape.param("high.W1")), tape.param("high.b1")));
  TapeHeads out;
  out.policy_out =
      tape.add_row(tape.matmul(h, tape.param("high.policy")), tape.param("high.policy_bias"));
  out.value = tape.add_row(tape.matmul(h, tape.param("high.value")), tape.param("high.value_bias"));
  return out;
}

}  // namespace curricula
