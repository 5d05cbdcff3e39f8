#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lifted/config.hpp"
#include "lifted/describe.hpp"
#include "lifted/llm_client.hpp"
#include "lifted/metrics.hpp"
#include "lifted/model.hpp"
#include "lifted/ops.hpp"
#include "lifted/synthetic.hpp"
#include "lifted/trainer.hpp"

namespace lifted {
namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = normal(rng);
  return Tensor::from(std::move(shape), std::move(v));
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_PrAuc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = u(rng);
    labels[i] = u(rng) < 0.5;
  }
  for (auto _ : state) benchmark::DoNotOptimize(pr_auc(scores, labels));
}
BENCHMARK(BM_PrAuc)->Arg(1000)->Arg(100000);

// A default-sized model on synthetic trials: one forward, and one forward
// plus backward with every training component on.
struct ModelFixture {
  ModelFixture() {
    const auto records = generate_synthetic(16, 3);
    StubLlmClient llm;
    TrainConfig cfg;
    const auto texts = materialize_texts(records, cfg, llm);
    vocab = build_text_vocabulary(texts, cfg.vocab_size);
    model = std::make_unique<LiftedModel>(cfg.model_config(vocab.size()), 1);
    trials = prepare_trials(records, texts, model->config(), vocab);
  }
  Vocabulary vocab;
  std::unique_ptr<LiftedModel> model;
  std::vector<PreparedTrial> trials;
};

ModelFixture& fixture() {
  static ModelFixture f;
  return f;
}

void BM_ForwardEval(benchmark::State& state) {
  auto& f = fixture();
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(f.model->forward(f.trials, {}).probabilities);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.trials.size()));
}
BENCHMARK(BM_ForwardEval)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  auto& f = fixture();
  Rng gate(1), aug(2), drop(3);
  ForwardOptions opts;
  opts.training = opts.augment = opts.aux = true;
  opts.eta1 = 0.1;
  opts.eta2 = 0.5;
  opts.gate_rng = &gate;
  opts.augment_rng = &aug;
  opts.dropout_rng = &drop;
  for (auto _ : state) {
    f.model->parameters().zero_grad();
    f.model->forward(f.trials, opts).total.backward();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.trials.size()));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace lifted

BENCHMARK_MAIN();
