#include <benchmark/benchmark.h>

#include "segdecomp/config.hpp"
#include "segdecomp/meta.hpp"

using namespace segdecomp;

namespace {

const std::vector<LabeledDataset>& days() {
  static const auto d = partition_by_day(synth_generate([] {
    auto c = two_regime_preset(1);
    c.n_days = 6;
    return c;
  }()));
  return d;
}

const DecomposerConfig& config_at(std::int64_t i) {
  static const std::vector<DecomposerConfig> configs{DecomposerConfig::ew(3, 2), DecomposerConfig::ew(20, 10),
                                                     DecomposerConfig::tw(60, 30), DecomposerConfig::tw(120, 60),
                                                     DecomposerConfig::dw(0.95)};
  return configs.at(static_cast<std::size_t>(i));
}

}  // namespace

static void BM_Decompose(benchmark::State& state) {
  const auto& stream = days()[0].stream;
  const auto& config = config_at(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(decompose(stream, config));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream.size()));
  state.SetLabel(config.to_string());
}
BENCHMARK(BM_Decompose)->DenseRange(0, 4);

static void BM_TrainNaiveBayes(benchmark::State& state) {
  const auto& d = days();
  const auto& config = config_at(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_fixed(d, config, {}));
  state.SetLabel(config.to_string());
}
BENCHMARK(BM_TrainNaiveBayes)->Arg(0)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_PredictAndCompose(benchmark::State& state) {
  const auto& d = days();
  const auto& config = config_at(state.range(0));
  const auto fp = fit_fixed(d, config, {});
  const auto day = index_day(d[1], fp.vocab);
  for (auto _ : state) benchmark::DoNotOptimize(predict_day(fp.model, day, config, {}));
  state.SetLabel(config.to_string());
}
BENCHMARK(BM_PredictAndCompose)->Arg(0)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_TimeSliceConfusion(benchmark::State& state) {
  const auto& d = days();
  const auto fp = fit_fixed(d, DecomposerConfig::ew(3, 2), {});
  const auto predicted = predict_fixed(fp, d, {});
  const auto truth = joined_truth(d);
  const double slice = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ts_confusion(truth, predicted, slice));
  state.SetLabel(std::to_string(d.size()) + " days");
}
BENCHMARK(BM_TimeSliceConfusion)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_SplineBasis(benchmark::State& state) {
  double x = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(spline_basis(x, 7, 6, 3));
    x += 0.01;
  }
}
BENCHMARK(BM_SplineBasis);
BENCHMARK_MAIN();
