#include <benchmark/benchmark.h>

#include <random>

#include "disagg/attention.hpp"

using namespace disagg;

namespace {

AttnInstance<double> make_instance(std::int64_t d_head, std::int64_t l) {
  std::mt19937_64 rng(1);
  auto uniform = [&] { return double(rng() >> 11) * 0x1p-53 * 2 - 1; };
  AttnInstance<double> inst;
  inst.scale = 1.0 / std::sqrt(double(d_head));
  inst.query.resize(size_t(d_head));
  for (auto& x : inst.query) x = uniform();
  inst.keys.resize(size_t(l));
  inst.values.resize(size_t(l));
  for (std::int64_t j = 0; j < l; ++j) {
    inst.keys[size_t(j)].resize(size_t(d_head));
    inst.values[size_t(j)].resize(size_t(d_head));
    for (auto& x : inst.keys[size_t(j)]) x = uniform();
    for (auto& x : inst.values[size_t(j)]) x = uniform();
  }
  return inst;
}

}  // namespace

static void BM_ExactAttention(benchmark::State& state) {
  const auto inst = make_instance(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(exact_attention(inst));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_ExactAttention)->Args({64, 256})->Args({128, 1024})->Args({128, 8192});

static void BM_SplitMerge(benchmark::State& state) {
  const auto inst = make_instance(128, state.range(0));
  const std::int64_t boundary = state.range(0) - 1;
  for (auto _ : state) {
    auto [prev, fresh] = split_prev_new(inst, boundary);
    benchmark::DoNotOptimize(finalize(merge(prev, fresh)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SplitMerge)->Arg(256)->Arg(4096);

BENCHMARK_MAIN();
