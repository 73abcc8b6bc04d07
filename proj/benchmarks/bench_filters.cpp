#include <benchmark/benchmark.h>

#include "floodsense/filters.hpp"
#include "floodsense/relevance.hpp"
#include "floodsense/synthetic.hpp"

using namespace floodsense;

namespace {

const synthetic::World& world() {
  static const auto w = synthetic::make_world();
  return w;
}

const std::vector<Message>& stream() {
  static const auto s = synthetic::generate_stream(world(), 100'000, 11);
  return s;
}

void BM_CascadeNoModel(benchmark::State& state) {
  for (auto _ : state) {
    auto r = run_cascade(stream(), FilterConfig{}, nullptr, static_cast<unsigned>(state.range(0)));
    benchmark::DoNotOptimize(r.messages.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream().size()));
}
BENCHMARK(BM_CascadeNoModel)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_CascadeWithModel(benchmark::State& state) {
  static const auto model = relevance::NBModel::train(synthetic::generate_training(world(), 2000, 7));
  for (auto _ : state) {
    auto r = run_cascade(stream(), FilterConfig{}, &model, static_cast<unsigned>(state.range(0)));
    benchmark::DoNotOptimize(r.messages.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream().size()));
}
BENCHMARK(BM_CascadeWithModel)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Blocklist(benchmark::State& state) {
  const Blocklist b(default_blocklist());
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(b.matches(stream()[i++ % stream().size()].text));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Blocklist);

}  // namespace
