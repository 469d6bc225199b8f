#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "claimsift/adam.hpp"
#include "claimsift/layers.hpp"
#include "claimsift/models.hpp"
#include "claimsift/ops.hpp"
#include "claimsift/preprocess.hpp"
#include "claimsift/tokenizer.hpp"

using namespace claimsift;

namespace {

Tensor random_f32(Shape shape, Rng& rng) {
  auto t = Tensor::zeros(std::move(shape));
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

IdMatrix random_batch(int rows, Rng& rng) {
  IdMatrix batch(rows, kSequenceLength);
  for (auto& id : batch.ids) id = static_cast<int32_t>(rng.below(kVocabularyCap));
  return batch;
}

void BM_Matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  auto a = random_f32({n, n}, rng);
  auto b = random_f32({n, n}, rng);
  NoGradGuard no_grad;
  for (auto _ : state) {
    auto c = matmul(a, b);
    benchmark::DoNotOptimize(c.values().data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_LstmCellStep(benchmark::State& state) {
  const int units = static_cast<int>(state.range(0));
  Rng rng(2);
  LstmWeights<float> w{random_f32({units, 4 * units}, rng),
                       random_f32({units, 4 * units}, rng), random_f32({4 * units}, rng)};
  auto x = random_f32({32, units}, rng);
  auto h = Tensor::zeros({32, units});
  auto c = Tensor::zeros({32, units});
  NoGradGuard no_grad;
  for (auto _ : state) {
    auto [hn, cn] = lstm_cell_step(x, h, c, w);
    benchmark::DoNotOptimize(hn.values().data());
  }
}
BENCHMARK(BM_LstmCellStep)->Arg(64)->Arg(128);

void BM_Normalize(benchmark::State& state) {
  const std::string text =
      "Check https://example.com/offer NOW!! @handle #promo 50% off all Premium plans "
      "— limited time, T&Cs apply. Visit www.example.com or reply STOP.";
  for (auto _ : state) {
    auto out = normalize(text);
    benchmark::DoNotOptimize(out.value.data());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<long long>(text.size()));
}
BENCHMARK(BM_Normalize);

void BM_ForwardInference(benchmark::State& state) {
  const ArchKind kind = static_cast<ArchKind>(state.range(0));
  Model model = Model::build(kind, 7, 0);
  Rng rng(3);
  IdMatrix batch = random_batch(32, rng);
  NoGradGuard no_grad;
  for (auto _ : state) {
    Tensor out = model.forward(batch, /*training=*/false);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetLabel(arch_name(kind));
}
BENCHMARK(BM_ForwardInference)
    ->Arg(static_cast<int>(ArchKind::SimpleLstm))
    ->Arg(static_cast<int>(ArchKind::Cnn))
    ->Arg(static_cast<int>(ArchKind::Transformer));

void BM_TrainStep(benchmark::State& state) {
  Model model = Model::build(ArchKind::SimpleLstm, 7, 0);
  Rng rng(4);
  IdMatrix batch = random_batch(32, rng);
  Tensor onehot = Tensor::zeros({32, kNumClasses});
  for (int i = 0; i < 32; ++i) onehot.values()[i * kNumClasses + i % 3] = 1.0f;
  AdamConfig config;
  Adam adam(config);
  std::vector<Tensor*> params;
  for (auto& p : model.parameters()) params.push_back(&p.tensor);
  Rng dropout_rng(5);
  for (auto _ : state) {
    Tensor loss = categorical_crossentropy(model.forward(batch, true, &dropout_rng), onehot);
    loss.backward();
    adam.step(params);
    model.zero_grads();
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
