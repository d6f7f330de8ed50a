#include "curricula/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace curricula {

int ParamStore::add(const std::string& name, Matrix value) {
  if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
  Entry e;
  e.name = name;
  e.grad = Matrix::zeros(value.rows, value.cols);
  e.adam_m = e.grad;
  e.adam_v = e.grad;
  e.value = std::move(value);
  entries_.push_back(std::move(e));
  index_[name] = static_cast<int>(entries_.size()) - 1;
  return index_[name];
}

int ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown name " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
}

void ParamStore::sgd_step(double lr) {
  for (auto& e : entries_)
    for (size_t i = 0; i < e.value.size(); ++i) e.value.data[i] -= lr * e.grad.data[i];
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  ++adam_t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t_));
  for (auto& e : entries_) {
    for (size_t i = 0; i < e.value.size(); ++i) {
      const double g = e.grad.data[i];
      e.adam_m.data[i] = beta1 * e.adam_m.data[i] + (1.0 - beta1) * g;
      e.adam_v.data[i] = beta2 * e.adam_v.data[i] + (1.0 - beta2) * g * g;
      const double mhat = e.adam_m.data[i] / c1;
      const double vhat = e.adam_v.data[i] / c2;
      e.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

std::vector<double> ParamStore::flatten() const {
  std::vector<double> flat;
  for (const auto& e : entries_) flat.insert(flat.end(), e.value.data.begin(), e.value.data.end());
  return flat;
}

void ParamStore::unflatten(const std::vector<double>& flat) {
  size_t pos = 0;
  for (auto& e : entries_) {
    if (pos + e.value.size() > flat.size())
      throw std::invalid_argument("ParamStore::unflatten: size mismatch");
    std::copy(flat.begin() + pos, flat.begin() + pos + e.value.size(), e.value.data.begin());
    pos += e.value.size();
  }
  if (pos != flat.size()) throw std::invalid_argument("ParamStore::unflatten: size mismatch");
}

const char* Tape::op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kParam: return "param";
    case Op::kMatMul: return "matmul";
    case Op::kMatMulNT: return "matmul_nt";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kHadamard: return "hadamard";
    case Op::kAddRow: return "add_row";
    case Op::kAffine: return "affine";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
    case Op::kSigmoid: return "sigmoid";
    case Op::kExp: return "exp";
    case Op::kClamp: return "clamp";
    case Op::kMinimum: return "minimum";
    case Op::kMaximum: return "maximum";
    case Op::kConcatCols: return "concat_cols";
    case Op::kSliceCols: return "slice_cols";
    case Op::kRowSoftmax: return "rowwise_softmax";
    case Op::kLogSoftmax: return "log_softmax";
    case Op::kPickPerRow: return "pick_per_row";
    case Op::kSumRows: return "sum_rows";
    case Op::kSumAll: return "sum_all";
    case Op::kMeanAll: return "mean_all";
  }
  return "?";
}

ValueId Tape::push(Node n, const char* what) {
  if (!n.val.all_finite())
    throw std::runtime_error(std::string("numeric failure: non-finite output of ") + what +
                             " at node " + std::to_string(nodes_.size()));
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

ValueId Tape::constant(Matrix m) {
  Node n;
  n.op = Op::kConstant;
  n.val = std::move(m);
  return push(std::move(n), "constant");
}

ValueId Tape::param(int param_index) {
  if (!params_) throw std::logic_error("Tape::param: no ParamStore bound");
  Node n;
  n.op = Op::kParam;
  n.param_index = param_index;
  n.val = params_->value(param_index);
  return push(std::move(n), "param");
}

ValueId Tape::param(const std::string& name) { return param(params_->find(name)); }

ValueId Tape::matmul(ValueId a, ValueId b) {
  Node n;
  n.op = Op::kMatMul;
  n.a = a;
  n.b = b;
  curricula::matmul(nodes_[a].val, nodes_[b].val, n.val);
  return push(std::move(n), "matmul");
}

ValueId Tape::matmul_nt(ValueId a, ValueId b) {
  Node n;
  n.op = Op::kMatMulNT;
  n.a = a;
  n.b = b;
  curricula::matmul_nt(nodes_[a].val, nodes_[b].val, n.val);
  return push(std::move(n), "matmul_nt");
}

ValueId Tape::add(ValueId a, ValueId b) {
  const Matrix &va = nodes_[a].val, &vb = nodes_[b].val;
  if (!va.same_shape(vb)) throw std::invalid_argument("add: shape mismatch");
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.val = va;
  for (size_t i = 0; i < n.val.size(); ++i) n.val.data[i] += vb.data[i];
  return push(std::move(n), "add");
}

ValueId Tape::sub(ValueId a, ValueId b) {
  const Matrix &va = nodes_[a].val, &vb = nodes_[b].val;
  if (!va.same_shape(vb)) throw std::invalid_argument("sub: shape mismatch");
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.val = va;
  for (size_t i = 0; i < n.val.size(); ++i) n.val.data[i] -= vb.data[i];
  return push(std::move(n), "sub");
}

ValueId Tape::hadamard(ValueId a, ValueId b) {
  const Matrix &va = nodes_[a].val, &vb = nodes_[b].val;
  if (!va.same_shape(vb)) throw std::invalid_argument("hadamard: shape mismatch");
  Node n;
  n.op = Op::kHadamard;
  n.a = a;
  n.b = b;
  n.val = va;
  for (size_t i = 0; i < n.val.size(); ++i) n.val.data[i] *= vb.data[i];
  return push(std::move(n), "hadamard");
}

ValueId Tape::add_row(ValueId m, ValueId row) {
  const Matrix &vm = nodes_[m].val, &vr = nodes_[row].val;
  if (vr.rows != 1 || vr.cols != vm.cols) throw std::invalid_argument("add_row: row must be 1 x cols");
  Node n;
  n.op = Op::kAddRow;
  n.a = m;
  n.b = row;
  n.val = vm;
  for (int i = 0; i < vm.rows; ++i)
    for (int j = 0; j < vm.cols; ++j) n.val.at(i, j) += vr.at(0, j);
  return push(std::move(n), "add_row");
}

ValueId Tape::affine(ValueId a, double scale, double shift) {
  Node n;
  n.op = Op::kAffine;
  n.a = a;
  n.s0 = scale;
  n.s1 = shift;
  n.val = nodes_[a].val;
  for (double& v : n.val.data) v = scale * v + shift;
  return push(std::move(n), "affine");
}

ValueId Tape::tanh(ValueId a) {
  Node n;
  n.op = Op::kTanh;
  n.a = a;
  n.val = nodes_[a].val;
  for (double& v : n.val.data) v = std::tanh(v);
  return push(std::move(n), "tanh");
}

ValueId Tape::relu(ValueId a) {
  Node n;
  n.op = Op::kRelu;
  n.a = a;
  n.val = nodes_[a].val;
  for (double& v : n.val.data) v = v > 0.0 ? v : 0.0;
  return push(std::move(n), "relu");
}

ValueId Tape::sigmoid(ValueId a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a;
  n.val = nodes_[a].val;
  for (double& v : n.val.data) v = 1.0 / (1.0 + std::exp(-v));
  return push(std::move(n), "sigmoid");
}

ValueId Tape::exp(ValueId a) {
  Node n;
  n.op = Op::kExp;
  n.a = a;
  n.val = nodes_[a].val;
  for (double& v : n.val.data) v = std::exp(v);
  return push(std::move(n), "exp");
}

ValueId Tape::clamp(ValueId a, double lo, double hi) {
  Node n;
  n.op = Op::kClamp;
  n.a = a;
  n.s0 = lo;
  n.s1 = hi;
  n.val = nodes_[a].val;
  for (double& v : n.val.data) v = std::clamp(v, lo, hi);
  return push(std::move(n), "clamp");
}

ValueId Tape::minimum(ValueId a, ValueId b) {
  const Matrix &va = nodes_[a].val, &vb = nodes_[b].val;
  if (!va.same_shape(vb)) throw std::invalid_argument("minimum: shape mismatch");
  Node n;
  n.op = Op::kMinimum;
  n.a = a;
  n.b = b;
  n.val = va;
  for (size_t i = 0; i < n.val.size(); ++i) n.val.data[i] = std::min(va.data[i], vb.data[i]);
  return push(std::move(n), "minimum");
}

ValueId Tape::maximum(ValueId a, ValueId b) {
  const Matrix &va = nodes_[a].val, &vb = nodes_[b].val;
  if (!va.same_shape(vb)) throw std::invalid_argument("maximum: shape mismatch");
  Node n;
  n.op = Op::kMaximum;
  n.a = a;
  n.b = b;
  n.val = va;
  for (size_t i = 0; i < n.val.size(); ++i) n.val.data[i] = std::max(va.data[i], vb.data[i]);
  return push(std::move(n), "maximum");
}

ValueId Tape::concat_cols(ValueId a, ValueId b) {
  const Matrix &va = nodes_[a].val, &vb = nodes_[b].val;
  if (va.rows != vb.rows) throw std::invalid_argument("concat_cols: row mismatch");
  Node n;
  n.op = Op::kConcatCols;
  n.a = a;
  n.b = b;
  n.i0 = va.cols;
  n.val = Matrix(va.rows, va.cols + vb.cols);
  for (int i = 0; i < va.rows; ++i) {
    for (int j = 0; j < va.cols; ++j) n.val.at(i, j) = va.at(i, j);
    for (int j = 0; j < vb.cols; ++j) n.val.at(i, va.cols + j) = vb.at(i, j);
  }
  return push(std::move(n), "concat_cols");
}

ValueId Tape::slice_cols(ValueId a, int start, int len) {
  const Matrix& va = nodes_[a].val;
  if (start < 0 || len <= 0 || start + len > va.cols)
    throw std::invalid_argument("slice_cols: bad range");
  Node n;
  n.op = Op::kSliceCols;
  n.a = a;
  n.i0 = start;
  n.val = Matrix(va.rows, len);
  for (int i = 0; i < va.rows; ++i)
    for (int j = 0; j < len; ++j) n.val.at(i, j) = va.at(i, start + j);
  return push(std::move(n), "slice_cols");
}

ValueId Tape::rowwise_softmax(ValueId a) {
  Node n;
  n.op = Op::kRowSoftmax;
  n.a = a;
  rowwise_softmax_inplace(nodes_[a].val, n.val);
  return push(std::move(n), "rowwise_softmax");
}

ValueId Tape::log_softmax(ValueId a) {
  const Matrix& va = nodes_[a].val;
  Node n;
  n.op = Op::kLogSoftmax;
  n.a = a;
  n.val = Matrix(va.rows, va.cols);
  for (int i = 0; i < va.rows; ++i) {
    double mx = va.at(i, 0);
    for (int j = 1; j < va.cols; ++j) mx = std::max(mx, va.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < va.cols; ++j) sum += std::exp(va.at(i, j) - mx);
    const double lse = mx + std::log(sum);
    for (int j = 0; j < va.cols; ++j) n.val.at(i, j) = va.at(i, j) - lse;
  }
  return push(std::move(n), "log_softmax");
}

ValueId Tape::pick_per_row(ValueId a, std::vector<int> cols) {
  const Matrix& va = nodes_[a].val;
  if (static_cast<int>(cols.size()) != va.rows)
    throw std::invalid_argument("pick_per_row: one column index per row required");
  for (int c : cols)
    if (c < 0 || c >= va.cols) throw std::invalid_argument("pick_per_row: index out of range");
  Node n;
  n.op = Op::kPickPerRow;
  n.a = a;
  n.val = Matrix(va.rows, 1);
  for (int i = 0; i < va.rows; ++i) n.val.at(i, 0) = va.at(i, cols[i]);
  n.cols = std::move(cols);
  return push(std::move(n), "pick_per_row");
}

ValueId Tape::sum_rows(ValueId a) {
  const Matrix& va = nodes_[a].val;
  Node n;
  n.op = Op::kSumRows;
  n.a = a;
  n.val = Matrix(va.rows, 1);
  for (int i = 0; i < va.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < va.cols; ++j) acc += va.at(i, j);
    n.val.at(i, 0) = acc;
  }
  return push(std::move(n), "sum_rows");
}

ValueId Tape::sum_all(ValueId a) {
  const Matrix& va = nodes_[a].val;
  Node n;
  n.op = Op::kSumAll;
  n.a = a;
  n.val = Matrix(1, 1);
  double acc = 0.0;
  for (double v : va.data) acc += v;
  n.val.at(0, 0) = acc;
  return push(std::move(n), "sum_all");
}

ValueId Tape::mean_all(ValueId a) {
  const Matrix& va = nodes_[a].val;
  if (va.size() == 0) throw std::invalid_argument("mean_all: empty input");
  Node n;
  n.op = Op::kMeanAll;
  n.a = a;
  n.val = Matrix(1, 1);
  double acc = 0.0;
  for (double v : va.data) acc += v;
  n.val.at(0, 0) = acc / static_cast<double>(va.size());
  return push(std::move(n), "mean_all");
}

ValueId Tape::categorical_log_prob(ValueId logits, const std::vector<int>& actions) {
  return pick_per_row(log_softmax(logits), actions);
}

void Tape::backward(ValueId loss) {
  if (loss < 0 || loss >= node_count()) throw std::invalid_argument("backward: bad loss id");
  if (nodes_[loss].val.rows != 1 || nodes_[loss].val.cols != 1)
    throw std::invalid_argument("backward: loss must be a 1x1 scalar");

  // Reachability pass so unrelated subgraphs are skipped.
  std::vector<char> reach(nodes_.size(), 0);
  std::vector<int> stack{loss};
  reach[loss] = 1;
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    for (int in : {n.a, n.b})
      if (in >= 0 && !reach[in]) {
        reach[in] = 1;
        stack.push_back(in);
      }
  }

  std::vector<Matrix> adj(nodes_.size());
  auto bump = [&](int id, int r, int c) -> Matrix& {
    if (adj[id].rows == 0) adj[id] = Matrix::zeros(r, c);
    return adj[id];
  };
  adj[loss] = Matrix(1, 1);
  adj[loss].at(0, 0) = 1.0;

  Matrix tmp;
  for (int id = loss; id >= 0; --id) {
    if (!reach[id] || adj[id].rows == 0) continue;
    const Node& n = nodes_[id];
    const Matrix& g = adj[id];
    switch (n.op) {
      case Op::kConstant:
        break;
      case Op::kParam: {
        Matrix& pg = params_->grad(n.param_index);
        for (size_t i = 0; i < pg.size(); ++i) pg.data[i] += g.data[i];
        break;
      }
      case Op::kMatMul: {
        const Matrix &va = nodes_[n.a].val, &vb = nodes_[n.b].val;
        curricula::matmul_nt(g, vb, tmp);
        Matrix& ga = bump(n.a, va.rows, va.cols);
        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += tmp.data[i];
        matmul_tn(va, g, tmp);
        Matrix& gb = bump(n.b, vb.rows, vb.cols);
        for (size_t i = 0; i < gb.size(); ++i) gb.data[i] += tmp.data[i];
        break;
      }
      case Op::kMatMulNT: {
        // c = a b^T  =>  da = g b, db = g^T a
        const Matrix &va = nodes_[n.a].val, &vb = nodes_[n.b].val;
        curricula::matmul(g, vb, tmp);
        Matrix& ga = bump(n.a, va.rows, va.cols);
        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += tmp.data[i];
        matmul_tn(g, va, tmp);
        Matrix& gb = bump(n.b, vb.rows, vb.cols);
        for (size_t i = 0; i < gb.size(); ++i) gb.data[i] += tmp.data[i];
        break;
      }
      case Op::kAdd: {
        Matrix& ga = bump(n.a, g.rows, g.cols);
        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += g.data[i];
        Matrix& gb = bump(n.b, g.rows, g.cols);
        for (size_t i = 0; i < gb.size(); ++i) gb.data[i] += g.data[i];
        break;
      }
      case Op::kSub: {
        Matrix& ga = bump(n.a, g.rows, g.cols);
        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += g.data[i];
        Matrix& gb = bump(n.b, g.rows, g.cols);
        for (size_t i = 0; i < gb.size(); ++i) gb.data[i] -= g.data[i];
        break;
      }
      case Op::kHadamard: {
        const Matrix &va = nodes_[n.a].val, &vb = nodes_[n.b].val;
        Matrix& ga = bump(n.a, g.rows, g.cols);
        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += g.data[i] * vb.data[i];
        Matrix& gb = bump(n.b, g.rows, g.cols);
        for (size_t i = 0; i < gb.size(); ++i) gb.data[i] += g.data[i] * va.data[i];
        break;
      }
      case Op::kAddRow: {
        Matrix& ga = bump(n.a, g.rows, g.cols);
        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += g.data[i];
        Matrix& gb = bump(n.b, 1, g.cols);
        for (int i = 0; i < g.rows; ++i)
          for (int j = 0; j < g.cols; ++j) gb.at(0, j) += g.at(i, j);
        break;
      }
      case Op::kAffine: {
        Matrix& ga = bump(n.a, g.rows, g.cols);
        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += n.s0 * g.data[i];
        break;
      }
      case Op::kTanh: {
        Matrix& ga = bump(n.a, g.rows, g.cols);
        for (size_t i = 0; i < ga.size(); ++i)
          ga.data[i] += g.data[i] * (1.0 - n.val.data[i] * n.val.data[i]);
        break;
      }
      case Op::kRelu: {
        const Matrix& va = nodes_[n.a].val;
        Matrix& ga = bump(n.a, g.rows, g.cols);
        for (size_t i = 0; i < ga.size(); ++i)
          if (va.data[i] > 0.0) ga.data[i] += g.data[i];
        break;
      }
      case Op::kSigmoid: {
        Matrix& ga = bump(n.a, g.rows, g.cols);
        for (size_t i = 0; i < ga.size(); ++i)
          ga.data[i] += g.data[i] * n.val.data[i] * (1.0 - n.val.data[i]);
        break;
      }
      case Op::kExp: {
        Matrix& ga = bump(n.a, g.rows, g.cols);
        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += g.data[i] * n.val.data[i];
        break;
      }
      case Op::kClamp: {
        const Matrix& va = nodes_[n.a].val;
        Matrix& ga = bump(n.a, g.rows, g.cols);
        for (size_t i = 0; i < ga.size(); ++i)
          if (va.data[i] >= n.s0 && va.data[i] <= n.s1) ga.data[i] += g.data[i];
        break;
      }
      case Op::kMinimum: {
        const Matrix &va = nodes_[n.a].val, &vb = nodes_[n.b].val;
        Matrix& ga = bump(n.a, g.rows, g.cols);
        Matrix& gb = bump(n.b, g.rows, g.cols);
        for (size_t i = 0; i < g.size(); ++i) {
          if (va.data[i] <= vb.data[i])
            ga.data[i] += g.data[i];
          else
            gb.data[i] += g.data[i];
        }
        break;
      }
      case Op::kMaximum: {
        const Matrix &va = nodes_[n.a].val, &vb = nodes_[n.b].val;
        Matrix& ga = bump(n.a, g.rows, g.cols);
        Matrix& gb = bump(n.b, g.rows, g.cols);
        for (size_t i = 0; i < g.size(); ++i) {
          if (va.data[i] >= vb.data[i])
            ga.data[i] += g.data[i];
          else
            gb.data[i] += g.data[i];
        }
        break;
      }
      case Op::kConcatCols: {
        const Matrix &va = nodes_[n.a].val, &vb = nodes_[n.b].val;
        Matrix& ga = bump(n.a, va.rows, va.cols);
        Matrix& gb = bump(n.b, vb.rows, vb.cols);
        for (int i = 0; i < g.rows; ++i) {
          for (int j = 0; j < va.cols; ++j) ga.at(i, j) += g.at(i, j);
          for (int j = 0; j < vb.cols; ++j) gb.at(i, j) += g.at(i, va.cols + j);
        }
        break;
      }
      case Op::kSliceCols: {
        const Matrix& va = nodes_[n.a].val;
        Matrix& ga = bump(n.a, va.rows, va.cols);
        for (int i = 0; i < g.rows; ++i)
          for (int j = 0; j < g.cols; ++j) ga.at(i, n.i0 + j) += g.at(i, j);
        break;
      }
      case Op::kRowSoftmax: {
        // dx = y * (g - <g, y>)
        Matrix& ga = bump(n.a, g.rows, g.cols);
        for (int i = 0; i < g.rows; ++i) {
          double dot = 0.0;
          for (int j = 0; j < g.cols; ++j) dot += g.at(i, j) * n.val.at(i, j);
          for (int j = 0; j < g.cols; ++j)
            ga.at(i, j) += n.val.at(i, j) * (g.at(i, j) - dot);
        }
        break;
      }
      case Op::kLogSoftmax: {
        // dx = g - softmax(x) * rowsum(g)
        Matrix& ga = bump(n.a, g.rows, g.cols);
        for (int i = 0; i < g.rows; ++i) {
          double rowsum = 0.0;
          for (int j = 0; j < g.cols; ++j) rowsum += g.at(i, j);
          for (int j = 0; j < g.cols; ++j)
            ga.at(i, j) += g.at(i, j) - std::exp(n.val.at(i, j)) * rowsum;
        }
        break;
      }
      case Op::kPickPerRow: {
        const Matrix& va = nodes_[n.a].val;
        Matrix& ga = bump(n.a, va.rows, va.cols);
        for (int i = 0; i < va.rows; ++i) ga.at(i, n.cols[i]) += g.at(i, 0);
        break;
      }
      case Op::kSumRows: {
        const Matrix& va = nodes_[n.a].val;
        Matrix& ga = bump(n.a, va.rows, va.cols);
        for (int i = 0; i < va.rows; ++i)
          for (int j = 0; j < va.cols; ++j) ga.at(i, j) += g.at(i, 0);
        break;
      }
      case Op::kSumAll: {
        const Matrix& va = nodes_[n.a].val;
        Matrix& ga = bump(n.a, va.rows, va.cols);
        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += g.at(0, 0);
        break;
      }
      case Op::kMeanAll: {
        const Matrix& va = nodes_[n.a].val;
        Matrix& ga = bump(n.a, va.rows, va.cols);
        const double s = g.at(0, 0) / static_cast<double>(va.size());
        for (size_t i = 0; i < ga.size(); ++i) ga.data[i] += s;
        break;
      }
    }
    adj[id] = Matrix();  // release as we go
  }
}

}  // namespace curricula
