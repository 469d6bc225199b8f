#include <doctest.h>

#include <cmath>
#include <vector>

#include "claimsift/adam.hpp"
#include "claimsift/layers.hpp"
#include "claimsift/ops.hpp"
#include "support/gradcheck.hpp"

using namespace claimsift;
using testsupport::random_tensor;

TEST_SUITE_BEGIN("tensor");

TEST_CASE("softmax symmetry and normalization") {
  auto x = Tensor64::from_values({1, 3}, {0.0, 0.0, 0.0});
  auto y = softmax(x);
  for (double v : y.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto z = random_tensor({4, 7}, rng, -8.0, 8.0);
    auto p = softmax(z);
    for (int r = 0; r < 4; ++r) {
      double sum = 0.0;
      for (int c = 0; c < 7; ++c) {
        double v = p.values()[r * 7 + c];
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("relu basic") {
  auto y = relu(Tensor64::from_values({2}, {-1.0, 2.0}));
  CHECK(y.values()[0] == 0.0);
  CHECK(y.values()[1] == 2.0);
}

TEST_CASE("conv1d valid-padding length arithmetic") {
  // L - k + 1, checked against the hand computation for the pipeline shape.
  Rng rng(7);
  auto x = random_tensor({2, 100, 4}, rng);
  auto w = random_tensor({3, 4, 5}, rng);
  auto b = random_tensor({5}, rng);
  auto y = conv1d(x, w, b);
  CHECK(y.shape() == Shape{2, 98, 5});

  // One-window dot product cross-check.
  auto x1 = Tensor64::from_values({1, 3, 1}, {1.0, 2.0, 3.0});
  auto w1 = Tensor64::from_values({3, 1, 1}, {0.5, -1.0, 2.0});
  auto b1 = Tensor64::from_values({1}, {0.25});
  auto y1 = conv1d(x1, w1, b1);
  CHECK(y1.values()[0] == doctest::Approx(0.5 - 2.0 + 6.0 + 0.25));
}

TEST_CASE("lstm cell zero weights and scalar hand value") {
  LstmWeights<double> w{Tensor64::zeros({3, 8}), Tensor64::zeros({2, 8}), Tensor64::zeros({8})};
  auto x = Tensor64::zeros({1, 3});
  auto h0 = Tensor64::zeros({1, 2});
  auto c0 = Tensor64::zeros({1, 2});
  auto [h, c] = lstm_cell_step(x, h0, c0, w);
  for (double v : h.values()) CHECK(v == 0.0);

  // 1-unit cell, W=U=0, b=0, c_prev=1:
  //   c = sigmoid(0)*1 + sigmoid(0)*tanh(0) = 0.5, h = 0.5*tanh(0.5)
  LstmWeights<double> w1{Tensor64::zeros({1, 4}), Tensor64::zeros({1, 4}), Tensor64::zeros({4})};
  auto [h1, c1] = lstm_cell_step(Tensor64::zeros({1, 1}), Tensor64::zeros({1, 1}),
                                 Tensor64::from_values({1, 1}, {1.0}), w1);
  CHECK(c1.values()[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(h1.values()[0] == doctest::Approx(0.23105857863000487).epsilon(1e-9));

  LstmWeights<double> bad{Tensor64::zeros({3, 8}), Tensor64::zeros({2, 8}), Tensor64::zeros({8})};
  CHECK_THROWS_WITH_AS(lstm_cell_step(Tensor64::zeros({1, 4}), h0, c0, bad),
                       doctest::Contains("lstm_cell_step"), Error);
}

TEST_CASE("bidirectional merge and symmetry") {
  Rng rng(11);
  const int units = 3;
  LstmWeights<double> shared{random_tensor({2, 4 * units}, rng),
                             random_tensor({units, 4 * units}, rng),
                             random_tensor({4 * units}, rng)};

  // Palindromic input with tied weights: the two directions agree at the
  // middle step.
  auto x = Tensor64::from_values({1, 3, 2}, {0.3, -0.2, 0.7, 0.1, 0.3, -0.2});
  auto seq = bidirectional_lstm(x, shared, shared, /*return_sequences=*/true);
  REQUIRE(seq.shape() == Shape{1, 3, 2 * units});
  for (int j = 0; j < units; ++j) {
    CHECK(seq.values()[1 * 2 * units + j] ==
          doctest::Approx(seq.values()[1 * 2 * units + units + j]).epsilon(1e-12));
  }

  // T=1: return_final equals the single-step outputs concatenated.
  auto x1 = Tensor64::from_values({1, 1, 2}, {0.4, -0.6});
  auto final1 = bidirectional_lstm(x1, shared, shared, /*return_sequences=*/false);
  auto [h_single, c_single] =
      lstm_cell_step(time_step(x1, 0), Tensor64::zeros({1, units}), Tensor64::zeros({1, units}),
                     shared);
  REQUIRE(final1.shape() == Shape{1, 2 * units});
  for (int j = 0; j < units; ++j) {
    CHECK(final1.values()[j] == doctest::Approx(h_single.values()[j]));
    CHECK(final1.values()[units + j] == doctest::Approx(h_single.values()[j]));
  }

  // Output feature dim is always 2 * units.
  auto x5 = random_tensor({2, 5, 2}, rng);
  CHECK(bidirectional_lstm(x5, shared, shared, true).shape() == Shape{2, 5, 2 * units});
  CHECK(bidirectional_lstm(x5, shared, shared, false).shape() == Shape{2, 2 * units});
}

TEST_CASE("attention_pool convexity and hand softmax") {
  Rng rng(13);
  // Identical rows pool to themselves regardless of weights.
  auto w = random_tensor({4, 1}, rng);
  auto b = random_tensor({1}, rng);
  auto h = Tensor64::zeros({1, 3, 4});
  for (int t = 0; t < 3; ++t) {
    for (int j = 0; j < 4; ++j) h.values()[t * 4 + j] = 0.25 * (j + 1);
  }
  auto pooled = attention_pool(h, w, b);
  for (int j = 0; j < 4; ++j) {
    CHECK(pooled.values()[j] == doctest::Approx(0.25 * (j + 1)).epsilon(1e-9));
  }

  // Zero scores give the uniform mean of rows.
  auto h2 = random_tensor({2, 5, 3}, rng);
  auto mean = attention_pool(h2, Tensor64::zeros({3, 1}), Tensor64::zeros({1}));
  for (int n = 0; n < 2; ++n) {
    for (int j = 0; j < 3; ++j) {
      double expect = 0.0;
      for (int t = 0; t < 5; ++t) expect += h2.values()[(n * 5 + t) * 3 + j];
      CHECK(mean.values()[n * 3 + j] == doctest::Approx(expect / 5.0).epsilon(1e-9));
    }
  }

  // T=2 with scores (0, ln 3): alpha = (0.25, 0.75).
  auto h3 = Tensor64::from_values({1, 2, 1}, {0.0, std::log(3.0)});
  auto pooled3 = attention_pool(h3, Tensor64::from_values({1, 1}, {1.0}), Tensor64::zeros({1}));
  CHECK(pooled3.values()[0] == doctest::Approx(0.75 * std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("multi-head self-attention degenerate cases") {
  Rng rng(17);
  const int d = 4, heads = 2;
  MhaWeights<double> w{random_tensor({d, d}, rng), random_tensor({d}, rng),
                       random_tensor({d, d}, rng), random_tensor({d}, rng),
                       random_tensor({d, d}, rng), random_tensor({d}, rng),
                       random_tensor({d, d}, rng), random_tensor({d}, rng)};

  // T=1: the attention weight matrix is [[1.0]] per head, so the output is
  // the value projection followed by the output projection.
  auto x1 = random_tensor({1, 1, d}, rng);
  auto out1 = multi_head_self_attention(x1, w, heads);
  auto expect1 = linear(linear(x1, w.value_kernel, w.value_bias), w.out_kernel, w.out_bias);
  REQUIRE(out1.shape() == expect1.shape());
  for (size_t i = 0; i < out1.values().size(); ++i) {
    CHECK(out1.values()[i] == doctest::Approx(expect1.values()[i]).epsilon(1e-12));
  }
  auto scores1 = attention_scores(linear(x1, w.query_kernel, w.query_bias),
                                  linear(x1, w.key_kernel, w.key_bias), heads);
  auto alpha1 = softmax(scores1);
  for (double v : alpha1.values()) CHECK(v == doctest::Approx(1.0));

  // Zero query/key weights give uniform attention: output equals projecting
  // the per-sequence mean of the values.
  MhaWeights<double> wz = w;
  wz.query_kernel = Tensor64::zeros({d, d});
  wz.query_bias = Tensor64::zeros({d});
  wz.key_kernel = Tensor64::zeros({d, d});
  wz.key_bias = Tensor64::zeros({d});
  auto x = random_tensor({2, 3, d}, rng);
  auto out = multi_head_self_attention(x, wz, heads);
  auto v = linear(x, wz.value_kernel, wz.value_bias);
  auto vbar = Tensor64::zeros({2, 3, d});
  for (int n = 0; n < 2; ++n) {
    for (int j = 0; j < d; ++j) {
      double mean = 0.0;
      for (int t = 0; t < 3; ++t) mean += v.values()[(n * 3 + t) * d + j];
      for (int t = 0; t < 3; ++t) vbar.values()[(n * 3 + t) * d + j] = mean / 3.0;
    }
  }
  auto expect = linear(vbar, wz.out_kernel, wz.out_bias);
  for (size_t i = 0; i < out.values().size(); ++i) {
    CHECK(out.values()[i] == doctest::Approx(expect.values()[i]).epsilon(1e-9));
  }

  CHECK_THROWS_WITH_AS(multi_head_self_attention(random_tensor({1, 2, 5}, rng), w, 2),
                       doctest::Contains("divisible"), Error);
}

TEST_CASE("categorical cross-entropy values") {
  // Perfect one-hot prediction: loss = -log(1 - 1e-7) ~ 0.
  auto perfect = categorical_crossentropy(
      Tensor64::from_values({1, 3}, {1.0, 0.0, 0.0}),
      Tensor64::from_values({1, 3}, {1.0, 0.0, 0.0}));
  CHECK(perfect.item() == doctest::Approx(-std::log(1.0 - 1e-7)).epsilon(1e-9));
  CHECK(perfect.item() < 1e-6);

  auto uniform = categorical_crossentropy(
      Tensor64::from_values({1, 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}),
      Tensor64::from_values({1, 3}, {0.0, 1.0, 0.0}));
  CHECK(uniform.item() == doctest::Approx(std::log(3.0)).epsilon(1e-12));

  // N=2 mixed case, hand computed: -(ln 0.7 + ln 0.3)/2.
  auto mixed = categorical_crossentropy(
      Tensor64::from_values({2, 3}, {0.7, 0.2, 0.1, 0.1, 0.6, 0.3}),
      Tensor64::from_values({2, 3}, {1.0, 0.0, 0.0, 0.0, 0.0, 1.0}));
  CHECK(mixed.item() == doctest::Approx(0.7803238741323343).epsilon(1e-9));

  CHECK_THROWS_AS(categorical_crossentropy(Tensor64::zeros({2, 3}), Tensor64::zeros({3, 3})),
                  Error);
}

TEST_CASE("backward basics: sum and square") {
  auto x = Tensor64::from_values({4}, {1.0, -2.0, 3.0, 0.5});
  x.set_requires_grad(true);
  sum_all(x).backward();
  for (double g : x.grad()) CHECK(g == 1.0);

  auto y = Tensor64::from_values({3}, {1.5, -0.5, 2.0});
  y.set_requires_grad(true);
  sum_all(mul(y, y)).backward();
  for (int i = 0; i < 3; ++i) CHECK(y.grad()[i] == doctest::Approx(2.0 * y.values()[i]));

  // Gradients accumulate additively across fan-out.
  auto z = Tensor64::from_values({2}, {1.0, 2.0});
  z.set_requires_grad(true);
  sum_all(add(z, z)).backward();
  for (double g : z.grad()) CHECK(g == 2.0);

  CHECK_THROWS_WITH_AS(Tensor64::zeros({3}).backward(), doctest::Contains("scalar"), Error);
}

TEST_CASE("adam single step matches the hand evaluation") {
  // theta=0, g=1, lr=0.001, t=1 -> theta = -0.001/(1+1e-7)
  AdamConfig config;
  AdamT<double> adam(config);
  auto theta = Tensor64::zeros({1});
  theta.set_requires_grad(true);
  theta.grad()[0] = 1.0;
  adam.step({&theta});
  CHECK(theta.values()[0] == doctest::Approx(-0.001 / (1.0 + 1e-7)).epsilon(1e-12));
  CHECK(theta.values()[0] == doctest::Approx(-0.000999999).epsilon(1e-6));
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
  Adam adam(AdamConfig{});
  auto theta = Tensor::from_values({3}, {0.5f, -1.0f, 2.0f});
  theta.set_requires_grad(true);
  theta.grad();  // allocate zeros
  const auto before = theta.values();
  adam.step({&theta});
  adam.step({&theta});
  CHECK(theta.values() == before);
}

TEST_CASE("adam against an independent recurrence oracle") {
  // Two steps with constant gradient, recurrences evaluated directly.
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-7;
  const double g = 0.3;
  double theta = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    theta -= lr * mhat / (std::sqrt(vhat) + eps);
  }

  AdamConfig config;
  config.learning_rate = lr;
  AdamT<double> adam(config);
  auto param = Tensor64::from_values({1}, {1.0});
  param.set_requires_grad(true);
  for (int t = 0; t < 2; ++t) {
    param.zero_grad();
    param.grad()[0] = g;
    adam.step({&param});
  }
  CHECK(param.values()[0] == doctest::Approx(theta).epsilon(1e-12));
  CHECK(adam.step_count() == 2);
}

TEST_CASE("dropout expectation, inference identity, and scaling") {
  Rng rng(99);
  auto ones = Tensor64::full({8}, 1.0);

  // Training mode: averaging many applications recovers the input.
  std::vector<double> mean(8, 0.0);
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    auto dropped = dropout(ones, 0.4, true, rng);
    for (int j = 0; j < 8; ++j) mean[j] += dropped.values()[j] / trials;
  }
  for (double v : mean) CHECK(std::abs(v - 1.0) < 0.03);

  // Inference mode is the identity (the same node, no copy).
  auto same = dropout(ones, 0.4, false, rng);
  CHECK(same.node() == ones.node());

  // Survivors are scaled by 1/(1-rate).
  auto scaled = dropout(ones, 0.4, true, rng);
  for (double v : scaled.values()) CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.6)));

  CHECK_THROWS_AS(dropout(ones, 1.0, true, rng), Error);
}

TEST_CASE("shape errors name the operation and both shapes") {
  auto a = Tensor64::zeros({2, 3});
  auto b = Tensor64::zeros({4, 5});
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("matmul"), Error);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("(2, 3)"), Error);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("(4, 5)"), Error);
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("add"), Error);
}

TEST_CASE("forward determinism for a fixed seed") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    auto x = random_tensor({3, 4}, rng);
    auto w = random_tensor({4, 2}, rng);
    auto b = random_tensor({2}, rng);
    auto y = softmax(linear(relu(x), w, b));
    return y.values();
  };
  CHECK(run(123) == run(123));
  CHECK(run(123) != run(124));
}

TEST_SUITE_END();
