#include <benchmark/benchmark.h>

#include "disagg/catalog.hpp"
#include "disagg/sim.hpp"
#include "disagg/trace.hpp"

using namespace disagg;

namespace {

std::vector<TraceRecord> workload(std::int64_t n) {
  TraceProfile profile;
  profile.n_requests = n;
  profile.mean_prompt = 1200;
  profile.mean_output = 60;
  profile.arrival_rate = 500;
  profile.seed = 1;
  return gen_trace(profile);
}

ClusterConfig dop24() {
  ClusterConfig c;
  c.mode = ClusterMode::disaggregated;
  c.compute_devices = {{builtin_catalog().device("H100"), 2}};
  c.memory_devices = {{builtin_catalog().device("H20"), 4}};
  c.network = "FHBN";
  return c;
}

}  // namespace

static void BM_Disaggregated(benchmark::State& state) {
  const LlmSpec& model = builtin_catalog().model("llama3-70b");
  const ClusterConfig cluster = dop24();
  const auto trace = workload(state.range(0));
  std::int64_t tokens = 0;
  for (auto _ : state) {
    const SimMetrics m = run_disaggregated(model, cluster, trace, {});
    benchmark::DoNotOptimize(m.throughput);
    tokens = m.tokens_generated;
  }
  state.SetItemsProcessed(state.iterations() * tokens);  // simulated tokens/s
}
BENCHMARK(BM_Disaggregated)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_GenTrace(benchmark::State& state) {
  TraceProfile profile;
  profile.n_requests = state.range(0);
  profile.mean_prompt = 1154.7;
  profile.mean_output = 211.1;
  profile.arrival_rate = 100;
  profile.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(gen_trace(profile));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenTrace)->Arg(19366);

BENCHMARK_MAIN();
