#pragma once

#include <map>
#include <string>
#include <vector>

#include "curricula/matrix.hpp"

namespace curricula {

// Named parameter tensors with gradient accumulators of identical shape.
class ParamStore {
 public:
  int add(const std::string& name, Matrix value);
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  int find(const std::string& name) const;  // throws if missing

  Matrix& value(int idx) { return entries_[idx].value; }
  const Matrix& value(int idx) const { return entries_[idx].value; }
  Matrix& value(const std::string& name) { return entries_[find(name)].value; }
  const Matrix& value(const std::string& name) const { return entries_[find(name)].value; }
  Matrix& grad(int idx) { return entries_[idx].grad; }
  const Matrix& grad(const std::string& name) const { return entries_[find(name)].grad; }

  int count() const { return static_cast<int>(entries_.size()); }
  const std::string& name(int idx) const { return entries_[idx].name; }

  void zero_grads();
  void sgd_step(double lr);
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Flat copy of all values in insertion order, and the inverse.
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

 private:
  struct Entry {
    std::string name;
    Matrix value, grad, adam_m, adam_v;
  };
  std::vector<Entry> entries_;
  std::map<std::string, int> index_;
  long adam_t_ = 0;
};

using ValueId = int;

// Define-by-run reverse-mode tape over matrix operations. A tape is rebuilt
// per forward pass; backward() visits nodes once in reverse creation order
// and accumulates parameter gradients into the bound ParamStore.
//
// Every operation validates shapes and checks its output for NaN/Inf,
// throwing std::runtime_error naming the offending node.
class Tape {
 public:
  explicit Tape(ParamStore* params = nullptr) : params_(params) {}

  ValueId constant(Matrix m);
  ValueId param(int param_index);
  ValueId param(const std::string& name);

  const Matrix& value(ValueId id) const { return nodes_[id].val; }

  ValueId matmul(ValueId a, ValueId b);
  ValueId matmul_nt(ValueId a, ValueId b);  // a * b^T
  ValueId add(ValueId a, ValueId b);
  ValueId sub(ValueId a, ValueId b);
  ValueId hadamard(ValueId a, ValueId b);
  ValueId add_row(ValueId m, ValueId row);  // row is 1 x cols, added to each row
  ValueId affine(ValueId a, double scale, double shift);
  ValueId tanh(ValueId a);
  ValueId relu(ValueId a);
  ValueId sigmoid(ValueId a);
  ValueId exp(ValueId a);
  ValueId clamp(ValueId a, double lo, double hi);
  ValueId minimum(ValueId a, ValueId b);
  ValueId maximum(ValueId a, ValueId b);
  ValueId concat_cols(ValueId a, ValueId b);
  ValueId slice_cols(ValueId a, int start, int len);
  ValueId rowwise_softmax(ValueId a);
  ValueId log_softmax(ValueId a);
  ValueId pick_per_row(ValueId a, std::vector<int> cols);  // B x C -> B x 1
  ValueId sum_rows(ValueId a);                             // B x C -> B x 1
  ValueId sum_all(ValueId a);                              // -> 1 x 1
  ValueId mean_all(ValueId a);                             // -> 1 x 1

  // Log-probability of one categorical index per row: B x A logits -> B x 1.
  ValueId categorical_log_prob(ValueId logits, const std::vector<int>& actions);

  // Backpropagates d(loss)/d(param) into the ParamStore accumulators.
  // loss must be 1 x 1.
  void backward(ValueId loss);

  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op {
    kConstant, kParam, kMatMul, kMatMulNT, kAdd, kSub, kHadamard, kAddRow, kAffine,
    kTanh, kRelu, kSigmoid, kExp, kClamp, kMinimum, kMaximum, kConcatCols,
    kSliceCols, kRowSoftmax, kLogSoftmax, kPickPerRow, kSumRows, kSumAll,
    kMeanAll,
  };
  struct Node {
    Op op;
    int a = -1, b = -1;
    Matrix val;
    double s0 = 0.0, s1 = 0.0;
    int i0 = 0;
    std::vector<int> cols;
    int param_index = -1;
  };

  ValueId push(Node n, const char* what);
  static const char* op_name(Op op);

  std::vector<Node> nodes_;
  ParamStore* params_ = nullptr;
};

}  // namespace curricula
