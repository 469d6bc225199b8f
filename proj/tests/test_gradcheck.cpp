#include <doctest.h>

#include <vector>

#include "claimsift/layers.hpp"
#include "claimsift/ops.hpp"
#include "support/gradcheck.hpp"

using namespace claimsift;
using testsupport::gradcheck_max_rel_error;
using testsupport::random_tensor;
using testsupport::random_weights;

namespace {

constexpr double kTol = 1e-4;

// Scalarizes a tensor-valued op with weights derived only from the seed and
// the output size, so repeated evaluations inside one finite-difference run
// see the same function.
Tensor64 scalarize(const Tensor64& out, uint64_t seed) {
  Rng rng(derive_seed(seed, out.values().size()));
  return weighted_sum_all(out, random_weights(out.values().size(), rng));
}

}  // namespace

TEST_SUITE_BEGIN("gradcheck");

TEST_CASE("elementwise and arithmetic primitives") {
  Rng rng(101);
  for (Shape shape : {Shape{5}, Shape{3, 4}, Shape{2, 3, 2}}) {
    auto a = random_tensor(shape, rng);
    auto b = random_tensor(shape, rng);

    CHECK(gradcheck_max_rel_error({&a, &b}, [&] { return scalarize(add(a, b), 1); }) < kTol);
    CHECK(gradcheck_max_rel_error({&a, &b}, [&] { return scalarize(mul(a, b), 2); }) < kTol);
    CHECK(gradcheck_max_rel_error({&a}, [&] { return scalarize(scale(a, 1.7), 3); }) < kTol);
    CHECK(gradcheck_max_rel_error({&a}, [&] { return scalarize(sigmoid(a), 4); }) < kTol);
    CHECK(gradcheck_max_rel_error({&a}, [&] { return scalarize(tanh(a), 5); }) < kTol);
    CHECK(gradcheck_max_rel_error({&a}, [&] { return scalarize(relu(a), 6); }) < kTol);
    CHECK(gradcheck_max_rel_error({&a}, [&] { return scalarize(softmax(a), 7); }) < kTol);
  }
}

TEST_CASE("bias broadcasting") {
  Rng rng(103);
  for (Shape shape : {Shape{4, 3}, Shape{2, 5, 4}, Shape{1, 2, 6}}) {
    auto x = random_tensor(shape, rng);
    auto b = random_tensor({shape.back()}, rng);
    CHECK(gradcheck_max_rel_error({&x, &b}, [&] { return scalarize(add_bias(x, b), 8); }) < kTol);
  }
  for (int t : {2, 4, 6}) {
    auto x = random_tensor({3, t, 4}, rng);
    auto p = random_tensor({t, 4}, rng);
    CHECK(gradcheck_max_rel_error({&x, &p}, [&] { return scalarize(add_position(x, p), 9); }) <
          kTol);
  }
}

TEST_CASE("matmul, linear, and dense") {
  Rng rng(105);
  const int dims[3][3] = {{2, 3, 4}, {1, 5, 2}, {4, 2, 3}};
  for (const auto& d : dims) {
    auto a = random_tensor({d[0], d[1]}, rng);
    auto b = random_tensor({d[1], d[2]}, rng);
    CHECK(gradcheck_max_rel_error({&a, &b}, [&] { return scalarize(matmul(a, b), 10); }) < kTol);
  }
  // linear over 2-d and 3-d inputs; dense layer = relu(linear).
  for (Shape shape : {Shape{4, 3}, Shape{2, 3, 3}, Shape{5, 3}}) {
    auto x = random_tensor(shape, rng);
    auto w = random_tensor({3, 4}, rng);
    auto b = random_tensor({4}, rng);
    CHECK(gradcheck_max_rel_error(
              {&x, &w, &b}, [&] { return scalarize(relu(linear(x, w, b)), 11); }) < kTol);
  }
}

TEST_CASE("embedding lookup") {
  Rng rng(107);
  for (int trial = 0; trial < 3; ++trial) {
    const int vocab = 7 + trial, width = 3 + trial;
    auto table = random_tensor({vocab, width}, rng);
    IdMatrix ids(2, 4 + trial);
    for (auto& id : ids.ids) id = static_cast<int32_t>(rng.below(vocab));
    ids.ids[0] = 0;  // include the padding row
    CHECK(gradcheck_max_rel_error(
              {&table}, [&] { return scalarize(embedding_lookup(table, ids), 12); }) < kTol);
  }
}

TEST_CASE("dropout with a fixed mask seed") {
  Rng rng(109);
  for (Shape shape : {Shape{6}, Shape{3, 5}, Shape{2, 2, 4}}) {
    auto x = random_tensor(shape, rng);
    const uint64_t mask_seed = 77 + shape.size();
    CHECK(gradcheck_max_rel_error({&x}, [&] {
            Rng mask_rng(mask_seed);
            return scalarize(dropout(x, 0.4, true, mask_rng), 13);
          }) < kTol);
  }
}

TEST_CASE("conv1d and pooling") {
  Rng rng(111);
  const int cfg[3][4] = {{1, 6, 2, 3}, {2, 8, 3, 2}, {3, 5, 1, 4}};  // n, t, cin, cout
  for (const auto& c : cfg) {
    auto x = random_tensor({c[0], c[1], c[2]}, rng);
    auto w = random_tensor({3, c[2], c[3]}, rng);
    auto b = random_tensor({c[3]}, rng);
    CHECK(gradcheck_max_rel_error(
              {&x, &w, &b}, [&] { return scalarize(conv1d(x, w, b), 14); }) < kTol);
  }
  for (Shape shape : {Shape{1, 6, 3}, Shape{2, 7, 2}, Shape{3, 4, 5}}) {
    auto x = random_tensor(shape, rng);
    CHECK(gradcheck_max_rel_error({&x}, [&] { return scalarize(maxpool1d(x, 2), 15); }) < kTol);
    CHECK(gradcheck_max_rel_error({&x}, [&] { return scalarize(global_max_pool(x), 16); }) <
          kTol);
    CHECK(gradcheck_max_rel_error({&x}, [&] { return scalarize(global_avg_pool(x), 17); }) <
          kTol);
  }
}

TEST_CASE("layer_norm") {
  Rng rng(113);
  for (Shape shape : {Shape{3, 4}, Shape{2, 3, 5}, Shape{1, 6}}) {
    auto x = random_tensor(shape, rng);
    auto g = random_tensor({shape.back()}, rng, 0.5, 1.5);
    auto b = random_tensor({shape.back()}, rng);
    CHECK(gradcheck_max_rel_error(
              {&x, &g, &b}, [&] { return scalarize(layer_norm(x, g, b), 18); }) < kTol);
  }
}

TEST_CASE("shape surgery ops") {
  Rng rng(115);
  for (Shape shape : {Shape{2, 8}, Shape{3, 6}, Shape{1, 4}}) {
    auto x = random_tensor(shape, rng);
    CHECK(gradcheck_max_rel_error(
              {&x}, [&] { return scalarize(slice_last(x, 1, shape[1] - 2), 19); }) < kTol);
  }
  for (int t : {2, 3, 5}) {
    auto x = random_tensor({2, t, 3}, rng);
    auto y = random_tensor({2, t, 2}, rng);
    CHECK(gradcheck_max_rel_error({&x}, [&] { return scalarize(time_step(x, t - 1), 20); }) <
          kTol);
    CHECK(gradcheck_max_rel_error(
              {&x, &y}, [&] { return scalarize(concat_last(x, y), 21); }) < kTol);
    auto steps_input = random_tensor({2, t, 3}, rng);
    CHECK(gradcheck_max_rel_error({&steps_input}, [&] {
            std::vector<Tensor64> steps;
            for (int tt = 0; tt < t; ++tt) steps.push_back(time_step(steps_input, tt));
            return scalarize(stack_time(steps), 22);
          }) < kTol);
  }
}

TEST_CASE("lstm cell step") {
  Rng rng(117);
  const int cfg[3][3] = {{1, 2, 3}, {2, 3, 2}, {3, 4, 4}};  // n, e, u
  for (const auto& c : cfg) {
    auto x = random_tensor({c[0], c[1]}, rng);
    auto h = random_tensor({c[0], c[2]}, rng);
    auto cell = random_tensor({c[0], c[2]}, rng);
    auto kernel = random_tensor({c[1], 4 * c[2]}, rng);
    auto recurrent = random_tensor({c[2], 4 * c[2]}, rng);
    auto bias = random_tensor({4 * c[2]}, rng);
    CHECK(gradcheck_max_rel_error({&x, &h, &cell, &kernel, &recurrent, &bias}, [&] {
            LstmWeights<double> w{kernel, recurrent, bias};
            auto [h_next, c_next] = lstm_cell_step(x, h, cell, w);
            return add(scalarize(h_next, 23), scalarize(c_next, 24));
          }) < kTol);
  }
}

TEST_CASE("bidirectional lstm") {
  Rng rng(119);
  const int cfg[3][4] = {{1, 3, 2, 2}, {2, 4, 3, 2}, {1, 2, 2, 3}};  // n, t, e, u
  for (const auto& c : cfg) {
    auto x = random_tensor({c[0], c[1], c[2]}, rng);
    auto fk = random_tensor({c[2], 4 * c[3]}, rng);
    auto fr = random_tensor({c[3], 4 * c[3]}, rng);
    auto fb = random_tensor({4 * c[3]}, rng);
    auto bk = random_tensor({c[2], 4 * c[3]}, rng);
    auto br = random_tensor({c[3], 4 * c[3]}, rng);
    auto bb = random_tensor({4 * c[3]}, rng);
    for (bool sequences : {true, false}) {
      CHECK(gradcheck_max_rel_error({&x, &fk, &fr, &fb, &bk, &br, &bb}, [&] {
              LstmWeights<double> fwd{fk, fr, fb}, bwd{bk, br, bb};
              return scalarize(bidirectional_lstm(x, fwd, bwd, sequences), 25);
            }) < kTol);
    }
  }
}

TEST_CASE("attention pooling") {
  Rng rng(121);
  const int cfg[3][3] = {{1, 3, 4}, {2, 5, 3}, {3, 2, 6}};  // n, t, d
  for (const auto& c : cfg) {
    auto h = random_tensor({c[0], c[1], c[2]}, rng);
    auto w = random_tensor({c[2], 1}, rng);
    auto b = random_tensor({1}, rng);
    CHECK(gradcheck_max_rel_error(
              {&h, &w, &b}, [&] { return scalarize(attention_pool(h, w, b), 26); }) < kTol);
  }
}

TEST_CASE("multi-head self-attention") {
  Rng rng(123);
  const int cfg[3][3] = {{1, 2, 4}, {2, 3, 4}, {1, 4, 6}};  // n, t, d (heads=2)
  for (const auto& c : cfg) {
    const int d = c[2];
    auto x = random_tensor({c[0], c[1], d}, rng);
    auto qk = random_tensor({d, d}, rng);
    auto qb = random_tensor({d}, rng);
    auto kk = random_tensor({d, d}, rng);
    auto kb = random_tensor({d}, rng);
    auto vk = random_tensor({d, d}, rng);
    auto vb = random_tensor({d}, rng);
    auto ok = random_tensor({d, d}, rng);
    auto ob = random_tensor({d}, rng);
    CHECK(gradcheck_max_rel_error({&x, &qk, &qb, &kk, &kb, &vk, &vb, &ok, &ob}, [&] {
            MhaWeights<double> w{qk, qb, kk, kb, vk, vb, ok, ob};
            return scalarize(multi_head_self_attention(x, w, 2), 27);
          }) < kTol);
  }
}

TEST_CASE("softmax + cross-entropy composite") {
  Rng rng(125);
  for (int n : {1, 3, 5}) {
    auto logits = random_tensor({n, 3}, rng, -2.0, 2.0);
    auto onehot = Tensor64::zeros({n, 3});
    for (int i = 0; i < n; ++i) onehot.values()[i * 3 + rng.below(3)] = 1.0;
    CHECK(gradcheck_max_rel_error({&logits}, [&] {
            return categorical_crossentropy(softmax(logits), onehot);
          }) < kTol);
  }
}

TEST_SUITE_END();
