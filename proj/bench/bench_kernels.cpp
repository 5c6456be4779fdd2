// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include "mixinfer/merge_engine.hpp"
#include "mixinfer/pretokenize.hpp"
#include "mixinfer/synthetic.hpp"
#include "mixinfer/timeline.hpp"

using namespace mixinfer;

namespace {

const std::vector<CategorySource>& pool() {
  static const auto p = [] {
    SyntheticSpec spec;
    spec.categories = 4;
    return generate_pool(spec, 2'000'000);
  }();
  return p;
}

const std::string& text() {
  static const std::string t = [] {
    std::string all;
    for (const auto& c : pool()) all += c.bytes;
    return all;
  }();
  return t;
}

std::vector<WordTable> tables() {
  std::vector<WordTable> out;
  for (const auto& c : pool()) out.push_back(pretokenize(c.bytes, PretokenRules{}));
  return out;
}

const MergeList& merges() {
  static const MergeList m = [] {
    WordTable all;
    for (const auto& t : tables()) all.merge(t);
    return train(all, 1000);
  }();
  return m;
}

struct Units {
  std::vector<std::vector<TokenId>> words;
  std::vector<std::uint64_t> counts;
};

const Units& units() {
  static const Units u = [] {
    Units out;
    const MergeList bytes;
    for (const auto& [w, c] : pretokenize(text(), PretokenRules{}).entries) {
      out.words.push_back(bytes.split_units(w));
      out.counts.push_back(c);
    }
    return out;
  }();
  return u;
}

void BM_PretokenizeSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(pretokenize_serial(text(), PretokenRules{}));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text().size()));
}

void BM_PretokenizeParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(pretokenize(text(), PretokenRules{}));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text().size()));
}

void BM_CountPairsSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(count_pairs_serial(units().words, units().counts));
}

void BM_CountPairsParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(count_pairs(units().words, units().counts));
}

void BM_ReplaySerial(benchmark::State& state) {
  const auto cats = tables();
  for (auto _ : state) benchmark::DoNotOptimize(replay_all_serial(cats, merges(), merges().size()));
}

void BM_ReplayParallel(benchmark::State& state) {
  const auto cats = tables();
  for (auto _ : state) benchmark::DoNotOptimize(replay_all(cats, merges(), merges().size()));
}

}  // namespace

BENCHMARK(BM_PretokenizeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PretokenizeParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountPairsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountPairsParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplaySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplayParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
