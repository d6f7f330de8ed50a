#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "curricula/autodiff.hpp"
#include "test_util.hpp"

using namespace curricula;
using curricula::testing::max_rel_grad_error;
using curricula::testing::random_matrix;

namespace {

// Smooth scalar readout so every entry of the op output influences the loss.
ValueId readout(Tape& tape, ValueId x) {
  return tape.mean_all(tape.tanh(tape.affine(x, 0.7, 0.1)));
}

}  // namespace

TEST_CASE("finite differences validate every differentiable op on random shapes") {
  Rng rng(11);
  int fixtures = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 1 + rng.uniform_int(5);
    const int c = 1 + rng.uniform_int(5);
    const int k = 1 + rng.uniform_int(5);

    {  // matmul + add + add_row + tanh
      ParamStore store;
      store.add("a", random_matrix(rng, r, k));
      store.add("b", random_matrix(rng, k, c));
      store.add("bias", random_matrix(rng, 1, c));
      auto build = [&](Tape& t) {
        return readout(t, t.add_row(t.matmul(t.param("a"), t.param("b")), t.param("bias")));
      };
      CHECK(max_rel_grad_error(store, build) < 1e-4);
      ++fixtures;
    }
    {  // matmul_nt + sub + hadamard + sigmoid
      ParamStore store;
      store.add("a", random_matrix(rng, r, k));
      store.add("b", random_matrix(rng, c, k));
      store.add("m", random_matrix(rng, r, c));
      auto build = [&](Tape& t) {
        const ValueId nt = t.matmul_nt(t.param("a"), t.param("b"));
        return readout(t, t.hadamard(t.sigmoid(nt), t.sub(nt, t.param("m"))));
      };
      CHECK(max_rel_grad_error(store, build) < 1e-4);
      ++fixtures;
    }
    {  // softmax / log_softmax / pick / sum_rows
      ParamStore store;
      store.add("logits", random_matrix(rng, r, 2 + c));
      std::vector<int> picks(r);
      for (int i = 0; i < r; ++i) picks[i] = rng.uniform_int(2 + c);
      auto build = [&](Tape& t) {
        const ValueId ls = t.log_softmax(t.param("logits"));
        const ValueId sm = t.rowwise_softmax(t.param("logits"));
        return t.add(t.mean_all(t.pick_per_row(ls, picks)),
                     t.mean_all(t.sum_rows(t.hadamard(sm, sm))));
      };
      CHECK(max_rel_grad_error(store, build) < 1e-4);
      ++fixtures;
    }
    {  // exp + clamp + minimum + maximum (kinks kept away from sample points)
      ParamStore store;
      store.add("a", random_matrix(rng, r, c, 0.45));
      store.add("b", random_matrix(rng, r, c, 0.45));
      auto build = [&](Tape& t) {
        const ValueId ea = t.exp(t.param("a"));
        const ValueId cl = t.clamp(t.param("b"), -10.0, 10.0);
        return readout(t, t.maximum(t.minimum(ea, cl), t.affine(cl, 0.5, -2.0)));
      };
      CHECK(max_rel_grad_error(store, build) < 1e-4);
      ++fixtures;
    }
    {  // concat_cols + slice_cols + relu (inputs shifted off the kink)
      ParamStore store;
      store.add("a", random_matrix(rng, r, c));
      store.add("b", random_matrix(rng, r, k));
      auto build = [&](Tape& t) {
        const ValueId cat = t.concat_cols(t.param("a"), t.param("b"));
        const ValueId sl = t.slice_cols(cat, 0, c);
        return readout(t, t.relu(t.affine(sl, 1.0, 1.5)));
      };
      CHECK(max_rel_grad_error(store, build) < 1e-4);
      ++fixtures;
    }
  }
  CHECK(fixtures == 100);
}

TEST_CASE("backward of a sum of losses equals the sum of separate backwards") {
  Rng rng(12);
  ParamStore store;
  store.add("w", random_matrix(rng, 4, 4));
  const Matrix x = random_matrix(rng, 3, 4);

  auto loss1 = [&](Tape& t) { return t.mean_all(t.tanh(t.matmul(t.constant(x), t.param("w")))); };
  auto loss2 = [&](Tape& t) {
    return t.mean_all(t.rowwise_softmax(t.matmul(t.constant(x), t.param("w"))));
  };

  Tape tape(&store);
  store.zero_grads();
  tape.backward(tape.add(loss1(tape), loss2(tape)));
  const Matrix combined = store.grad("w");

  Tape t1(&store);
  store.zero_grads();
  t1.backward(loss1(t1));
  Matrix separate = store.grad("w");
  Tape t2(&store);
  store.zero_grads();
  t2.backward(loss2(t2));
  for (size_t i = 0; i < separate.size(); ++i) separate.data[i] += store.grad("w").data[i];

  for (size_t i = 0; i < combined.size(); ++i)
    CHECK(std::abs(combined.data[i] - separate.data[i]) < 1e-9);
}

TEST_CASE("identical inputs give bit-identical forward results") {
  Rng rng(13);
  ParamStore store;
  store.add("w", random_matrix(rng, 6, 6));
  const Matrix x = random_matrix(rng, 5, 6);
  auto run = [&]() {
    Tape t(&store);
    return t.value(t.mean_all(t.rowwise_softmax(t.matmul(t.constant(x), t.param("w"))))).at(0, 0);
  };
  CHECK(run() == run());
}

TEST_CASE("non-finite outputs raise a numeric-failure error naming the node") {
  Tape tape;
  Matrix big(1, 1);
  big.at(0, 0) = 1e308;
  const ValueId b = tape.constant(big);
  CHECK_THROWS_WITH_AS(tape.exp(b), doctest::Contains("exp"), std::runtime_error);
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  const ValueId v = tape.constant(Matrix::zeros(2, 2));
  CHECK_THROWS_AS(tape.backward(v), std::invalid_argument);
}

TEST_CASE("shape mismatches are contract violations") {
  Tape tape;
  const ValueId a = tape.constant(Matrix::zeros(2, 3));
  const ValueId b = tape.constant(Matrix::zeros(3, 3));
  CHECK_THROWS_AS(tape.add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(tape.pick_per_row(a, {0, 1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(tape.slice_cols(a, 2, 5), std::invalid_argument);
}
