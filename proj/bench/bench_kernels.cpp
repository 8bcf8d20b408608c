// Serial reference vs OpenMP for the two data-parallel kernels.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lobfeat/book.hpp"
#include "lobfeat/feature_matrix.hpp"
#include "lobfeat/kernels.hpp"
#include "lobfeat/synthetic.hpp"

using namespace lobfeat;

namespace {

std::vector<double> price_series(std::size_t n) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z(0.0, 500.0);
  std::vector<double> x(n);
  for (auto& v : x) v = 126200.0 + z(rng);
  return x;
}

const std::vector<BookSnapshot>& day_snapshots() {
  static const auto snaps = [] {
    SynthSpec spec;
    spec.steps = 20000;
    const auto day = generate_day(spec, 0, 3);
    return build_book(day.events);
  }();
  return snaps;
}

void neighborhood(benchmark::State& state, kernels::Backend b) {
  const auto x = price_series(static_cast<std::size_t>(state.range(0)));
  std::vector<kernels::NeighborhoodStat> out(x.size());
  for (auto _ : state) {
    kernels::neighborhood_stats(b, x, 40, 0.10, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void features(benchmark::State& state, kernels::Backend b) {
  const auto& snaps = day_snapshots();
  FeatureOptions opt;
  opt.tick = TickSize(100);
  for (auto _ : state) {
    auto f = extract_features(snaps, WindowSpec::protocol1(), opt, b);
    benchmark::DoNotOptimize(f.matrix.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(snaps.size()));
}

}  // namespace

BENCHMARK_CAPTURE(neighborhood, serial, kernels::Backend::Serial)->Arg(100000);
BENCHMARK_CAPTURE(neighborhood, omp, kernels::Backend::OpenMP)->Arg(100000);
BENCHMARK_CAPTURE(features, serial, kernels::Backend::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(features, omp, kernels::Backend::OpenMP)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
