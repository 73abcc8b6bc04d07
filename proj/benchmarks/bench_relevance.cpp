#include <benchmark/benchmark.h>

#include "floodsense/relevance.hpp"
#include "floodsense/synthetic.hpp"

using namespace floodsense;

namespace {

const std::vector<relevance::LabeledExample>& training() {
  static const auto t = synthetic::generate_training(synthetic::make_world(), 4000, 3);
  return t;
}

void BM_Train(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(relevance::NBModel::train(training()).vocabulary_size());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(training().size()));
}
BENCHMARK(BM_Train)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const auto model = relevance::NBModel::train(training());
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict(training()[i++ % training().size()].text).label);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Predict);

void BM_CrossValidate(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(relevance::cross_validate(training(), 6, 1).total());
}
BENCHMARK(BM_CrossValidate)->Unit(benchmark::kMillisecond);

}  // namespace
