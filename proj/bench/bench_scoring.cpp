// Batch scoring: OpenMP kernel against the serial reference.
#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "iecache/evaluation.hpp"

namespace {

std::string words(std::mt19937& rng, std::size_t n) {
  static const char* vocab[] = {"meeting", "budget", "the", "team", "agreed", "to", "delay", "launch",
                                "design", "review", "remote", "control", "battery", "cost", "user", "a"};
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + std::string(vocab[rng() % 16]);
  return s;
}

struct Batch {
  std::vector<iecache::ScoreInput> inputs;
};

Batch make_batch(std::size_t n, std::size_t len) {
  std::mt19937 rng(99);
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    iecache::ScoreInput in;
    in.task_id = "b" + std::to_string(i);
    in.prediction = words(rng, len);
    in.golds = {words(rng, len), words(rng, len)};
    b.inputs.push_back(std::move(in));
  }
  return b;
}

void BM_ScoreSerial(benchmark::State& state) {
  auto b = make_batch(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(iecache::score_items_serial(b.inputs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreParallel(benchmark::State& state) {
  auto b = make_batch(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(iecache::score_items(b.inputs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_ScoreSerial)->Args({64, 200})->Args({256, 400});
BENCHMARK(BM_ScoreParallel)->Args({64, 200})->Args({256, 400});

BENCHMARK_MAIN();
