#include <benchmark/benchmark.h>

#include <random>

#include "disagg/graph.hpp"

using namespace disagg;

namespace {

// Stacked transformer-style blocks: n_layers attention nodes with residual
// bypasses, the shape the slicer sees in practice.
CompGraph stacked_blocks(std::int64_t n_layers) {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  auto add_node = [&](const std::string& id, NodeKind kind) {
    nodes.push_back({id, kind, ""});
    return std::int32_t(nodes.size() - 1);
  };
  const std::int32_t input = add_node("in", NodeKind::input);
  std::int32_t prev = input;
  for (std::int64_t layer = 0; layer < n_layers; ++layer) {
    const std::string p = "l" + std::to_string(layer) + ".";
    const std::int32_t q = add_node(p + "q", NodeKind::q_proj);
    const std::int32_t k = add_node(p + "k", NodeKind::k_proj);
    const std::int32_t v = add_node(p + "v", NodeKind::v_proj);
    const std::int32_t attn = add_node(p + "attn", NodeKind::attention);
    const std::int32_t out = add_node(p + "out", NodeKind::matmul);
    const std::int32_t add = add_node(p + "add", NodeKind::elementwise);
    edges.push_back({prev, q, 16384});
    edges.push_back({prev, k, 16384});
    edges.push_back({prev, v, 16384});
    edges.push_back({q, attn, 16384});
    edges.push_back({k, attn, 2048});
    edges.push_back({v, attn, 2048});
    edges.push_back({attn, out, 16384});
    edges.push_back({out, add, 16384});
    edges.push_back({prev, add, 16384});
    prev = add;
  }
  const std::int32_t output = add_node("out", NodeKind::output);
  edges.push_back({prev, output, 16384});
  return CompGraph(std::move(nodes), std::move(edges));
}

}  // namespace

static void BM_MinCut(benchmark::State& state) {
  const CompGraph g = stacked_blocks(state.range(0));
  const auto attn = g.attention_nodes();
  for (auto _ : state) benchmark::DoNotOptimize(min_cut_at(g, attn[attn.size() / 2]));
}
BENCHMARK(BM_MinCut)->Arg(4)->Arg(16)->Arg(80);

static void BM_SliceModel(benchmark::State& state) {
  const CompGraph g = stacked_blocks(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(slice_model(g));
}
BENCHMARK(BM_SliceModel)->Arg(4)->Arg(16)->Arg(80);

BENCHMARK_MAIN();
