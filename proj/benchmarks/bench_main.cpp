#include <random>

#include <benchmark/benchmark.h>

#include "dualdec/eval.hpp"
#include "dualdec/gru.hpp"
#include "dualdec/model.hpp"
#include "dualdec/tape.hpp"

using namespace dualdec;

namespace {

void BM_GruCell(benchmark::State& state) {
  const auto input = static_cast<std::size_t>(state.range(0));
  const auto hidden = static_cast<std::size_t>(state.range(1));
  ParameterSet<float> params;
  const auto w = add_gru_parameters(params, "g", input, hidden);
  params.init_uniform(1, 0.08);
  for (auto _ : state) {
    Tape<float> tape;
    const Var h = gru_cell(tape, w, tape.constant(Tensor<float>(Shape{input}, 0.1f)),
                           tape.constant(Tensor<float>(Shape{hidden}, 0.2f)));
    benchmark::DoNotOptimize(tape.value(h)[0]);
  }
}
BENCHMARK(BM_GruCell)->Args({32, 32})->Args({300, 100});

// One attention + GRU + output-softmax step at the default sizes.
void BM_DecodeStep(benchmark::State& state) {
  const auto vocab = static_cast<std::size_t>(state.range(0));
  ResponseModel<float> model(ModelKind::kDual, ModelDims{vocab, vocab, 300, 100, 50, 50});
  model.initialize(1, 0.08);
  const std::vector<TokenId> post(10, 7);
  for (auto _ : state) {
    Tape<float> tape;
    const auto enc = model.encode_post(tape, post);
    const Var keys = model.attention_keys(tape, Branch::kPositive, enc);
    const Var s0 = model.initial_state(tape, Branch::kPositive, enc, Label::kPositive);
    const auto out = model.decode_step(tape, Branch::kPositive, s0, Vocabulary::kSos, enc, keys);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_DecodeStep)->Arg(1000)->Arg(30004)->Unit(benchmark::kMillisecond);

void BM_InstanceBackward(benchmark::State& state) {
  ResponseModel<float> model(ModelKind::kDual, ModelDims{1000, 1000, 32, 32, 50, 50});
  model.initialize(1, 0.08);
  const EncodedInstance inst{std::vector<TokenId>(10, 5), std::vector<TokenId>(12, 9), Label::kNegative};
  for (auto _ : state) {
    Tape<float> tape;
    const auto grads = backward(tape, model.instance_loss(tape, inst), model.parameters());
    benchmark::DoNotOptimize(grads[0][0]);
  }
}
BENCHMARK(BM_InstanceBackward)->Unit(benchmark::kMillisecond);

void BM_Bleu2(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  auto sentence = [&] {
    Tokens t(5 + rng() % 15);
    for (auto& w : t) w = "w" + std::to_string(rng() % 500);
    return t;
  };
  std::vector<Tokens> cands;
  std::vector<std::vector<Tokens>> refs;
  for (std::size_t i = 0; i < n; ++i) {
    cands.push_back(sentence());
    refs.push_back({sentence(), sentence(), sentence()});
  }
  for (auto _ : state) benchmark::DoNotOptimize(bleu_n(cands, refs, 2));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_Bleu2)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
