#include <random>
#include <set>

#include "doctest.h"
#include "disagg/graph.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace disagg;
using gen::random_dag;

namespace {

const char* kDataDir = DISAGG_DATA_DIR;

CompGraph llama_block() { return load_graph_file(std::string(kDataDir) + "/graphs/llama-block.json"); }

// in -> a -> attn -> b -> out with two bypass edges of weight 3 and 5.
CompGraph diamond() {
  std::vector<GraphNode> nodes{{"in", NodeKind::input, ""},   {"a", NodeKind::matmul, ""},
                               {"attn", NodeKind::attention, ""}, {"b", NodeKind::matmul, ""},
                               {"out", NodeKind::output, ""}};
  std::vector<GraphEdge> edges{{0, 1, 10}, {1, 2, 10}, {2, 3, 10}, {3, 4, 10},
                               {1, 3, 3},  {0, 3, 5}};
  return CompGraph(std::move(nodes), std::move(edges));
}

// a -> attn -> b chain, no bypass.
CompGraph chain() {
  std::vector<GraphNode> nodes{{"a", NodeKind::input, ""},
                               {"attn", NodeKind::attention, ""},
                               {"b", NodeKind::output, ""}};
  std::vector<GraphEdge> edges{{0, 1, 7}, {1, 2, 7}};
  return CompGraph(std::move(nodes), std::move(edges));
}

// Two stacked single-edge attention blocks with residual bypasses.
CompGraph two_layer_toy() {
  std::vector<GraphNode> nodes{
      {"in", NodeKind::input, ""},     {"q1", NodeKind::q_proj, ""},
      {"attn1", NodeKind::attention, ""}, {"mix1", NodeKind::matmul, ""},
      {"q2", NodeKind::q_proj, ""},    {"attn2", NodeKind::attention, ""},
      {"mix2", NodeKind::matmul, ""},  {"out", NodeKind::output, ""}};
  std::vector<GraphEdge> edges{{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {0, 3, 2}, {3, 4, 4},
                               {4, 5, 4}, {5, 6, 4}, {3, 6, 2}, {6, 7, 4}};
  return CompGraph(std::move(nodes), std::move(edges));
}

}  // namespace

TEST_CASE("llama block fixture loads as a 12-node graph") {
  const CompGraph g = llama_block();
  CHECK(g.nodes().size() == 12);
  CHECK(g.edges().size() == 15);
  CHECK(g.attention_nodes().size() == 1);
}

TEST_CASE("load_graph rejects malformed inputs") {
  // back-edge cycle
  json cyclic = json::parse(R"({
    "nodes": [{"id":"a","kind":"input"},{"id":"b","kind":"other"},{"id":"c","kind":"output"}],
    "edges": [{"src":"a","dst":"b","bytes":1},{"src":"b","dst":"b","bytes":1},
              {"src":"b","dst":"c","bytes":1}]
  })");
  CHECK_THROWS_WITH_AS(load_graph(cyclic), doctest::Contains("cycle"), ValidationError);

  json dangling = json::parse(R"({
    "nodes": [{"id":"a","kind":"input"},{"id":"b","kind":"output"}],
    "edges": [{"src":"a","dst":"ghost","bytes":1}]
  })");
  CHECK_THROWS_WITH_AS(load_graph(dangling), doctest::Contains("unknown node"), ValidationError);

  json nonpositive = json::parse(R"({
    "nodes": [{"id":"a","kind":"input"},{"id":"b","kind":"output"}],
    "edges": [{"src":"a","dst":"b","bytes":0}]
  })");
  CHECK_THROWS_WITH_AS(load_graph(nonpositive), doctest::Contains("positive"), ValidationError);

  json two_sources = json::parse(R"({
    "nodes": [{"id":"a","kind":"input"},{"id":"b","kind":"input"},{"id":"c","kind":"output"}],
    "edges": [{"src":"a","dst":"c","bytes":1},{"src":"b","dst":"c","bytes":1}]
  })");
  CHECK_THROWS_WITH_AS(load_graph(two_sources), doctest::Contains("input frontier"),
                       ValidationError);
}

TEST_CASE("two attention nodes load and slice into three") {
  const CompGraph g = two_layer_toy();
  CHECK(g.attention_nodes().size() == 2);
  const auto slices = slice_model(g);
  CHECK(slices.size() == 3);
}

TEST_CASE("chain cut is empty") {
  const CutResult cut = min_cut_at(chain(), "attn");
  CHECK(cut.cut_weight == 0);
  CHECK(cut.cut_edges.empty());
}

TEST_CASE("llama block: the residual edge is the unique cut") {
  const CompGraph g = llama_block();
  const CutResult cut = min_cut_at(g, "attn");
  CHECK(cut.cut_weight == 16384);
  REQUIRE(cut.cut_edges.size() == 1);
  const GraphEdge& e = g.edges()[size_t(cut.cut_edges[0])];
  CHECK(g.node(e.src).id == "x");
  CHECK(g.node(e.dst).id == "add1");

  CHECK(cut.cut_weight == oracle::min_cut_brute_force(g, g.node_index("attn")));
}

TEST_CASE("diamond bypass: both residual edges in the cut") {
  const CompGraph g = diamond();
  const CutResult cut = min_cut_at(g, "attn");
  CHECK(cut.cut_weight == 8);
  CHECK(cut.cut_edges.size() == 2);
  CHECK(cut.cut_weight == oracle::min_cut_brute_force(g, g.node_index("attn")));
}

TEST_CASE("min_cut_at requires an attention node") {
  CHECK_THROWS_AS(min_cut_at(chain(), "a"), ValidationError);
}

TEST_CASE("min-cut equals brute force on 200 random DAGs (criterion-grade)") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::int32_t n = 5 + std::int32_t(rng() % 8);  // up to 12 nodes
    const CompGraph g = random_dag(rng, n);
    const std::int32_t attn = g.attention_nodes().at(0);
    const CutResult cut = min_cut_at(g, attn);
    CHECK(cut.cut_weight == oracle::min_cut_brute_force(g, attn));

    // Prefix property, edge by edge: nothing flows t-side -> s-side.
    std::set<std::int32_t> s_side(cut.s_side.begin(), cut.s_side.end());
    for (const auto& e : g.edges()) {
      if (e.src == attn || e.dst == attn) continue;
      const bool src_s = s_side.count(e.src) > 0;
      const bool dst_s = s_side.count(e.dst) > 0;
      CHECK(!(dst_s && !src_s));
    }
    // Bipartition covers everything but the attention node.
    CHECK(cut.s_side.size() + cut.t_side.size() + 1 == g.nodes().size());
  }
}

TEST_CASE("slice_model partitions the llama block") {
  const CompGraph g = llama_block();
  const auto slices = slice_model(g);
  REQUIRE(slices.size() == 2);

  std::set<std::string> first, second;
  for (auto v : slices[0].ops) first.insert(g.node(v).id);
  for (auto v : slices[1].ops) second.insert(g.node(v).id);
  CHECK(first == std::set<std::string>{"x", "q_proj", "k_proj", "v_proj"});
  CHECK(second ==
        std::set<std::string>{"attn", "out_proj", "add1", "fc", "act", "proj", "add2", "y"});

  REQUIRE(slices[1].context_in.size() == 1);
  CHECK(slices[0].context_out == slices[1].context_in);
  CHECK(slices[0].context_in.empty());
  CHECK(slices[1].context_out.empty());
}

TEST_CASE("no attention: one slice holding everything") {
  std::vector<GraphNode> nodes{{"a", NodeKind::input, ""},
                               {"b", NodeKind::matmul, ""},
                               {"c", NodeKind::output, ""}};
  std::vector<GraphEdge> edges{{0, 1, 1}, {1, 2, 1}};
  const CompGraph g(std::move(nodes), std::move(edges));
  const auto slices = slice_model(g);
  REQUIRE(slices.size() == 1);
  CHECK(slices[0].ops.size() == 3);
}

TEST_CASE("slice properties: disjoint cover, contexts match cuts") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const CompGraph g = trial % 2 ? two_layer_toy() : llama_block();
    const auto slices = slice_model(g);
    std::set<std::int32_t> seen;
    for (const auto& s : slices)
      for (auto v : s.ops) CHECK(seen.insert(v).second);
    CHECK(seen.size() == g.nodes().size());

    std::uint64_t context_total = 0;
    for (const auto& s : slices)
      for (auto ei : s.context_out) context_total += g.edges()[size_t(ei)].bytes;
    std::uint64_t cut_total = 0;
    for (auto attn : g.attention_nodes()) cut_total += min_cut_at(g, attn).cut_weight;
    CHECK(context_total == cut_total);
    for (size_t k = 0; k + 1 < slices.size(); ++k)
      CHECK(slices[k].context_out == slices[k + 1].context_in);
  }
}

TEST_CASE("batch scaling multiplies weights") {
  const CompGraph g = llama_block().scaled(256);
  const CutResult cut = min_cut_at(g, "attn");
  CHECK(cut.cut_weight == 16384ull * 256);
}

TEST_CASE("schedule: q_proj first among the projections, send markers placed") {
  const CompGraph g = llama_block();
  const auto slices = slice_model(g);
  const auto schedule = schedule_slice(g, slices[0]);

  // x, then q_proj (ancestor closure), then send Q, then k/v by id order,
  // then send KV.
  std::vector<std::string> got;
  for (const auto& item : schedule) {
    if (item.kind == ScheduleItem::Kind::op)
      got.push_back(g.node(item.node).id);
    else
      got.push_back(item.kind == ScheduleItem::Kind::send_q ? "<send-q>" : "<send-kv>");
  }
  const std::vector<std::string> want{"x", "q_proj", "<send-q>", "k_proj", "v_proj", "<send-kv>"};
  CHECK(got == want);

  // Slice without a q_proj: only the KV marker.
  const auto tail = schedule_slice(g, slices[1]);
  std::int64_t send_q = 0, send_kv = 0;
  for (const auto& item : tail) {
    send_q += item.kind == ScheduleItem::Kind::send_q;
    send_kv += item.kind == ScheduleItem::Kind::send_kv;
  }
  CHECK(send_q == 0);
  CHECK(send_kv == 1);
  CHECK(tail.back().kind == ScheduleItem::Kind::send_kv);

  // Determinism.
  const auto again = schedule_slice(g, slices[0]);
  REQUIRE(again.size() == schedule.size());
  for (size_t i = 0; i < again.size(); ++i) {
    CHECK(again[i].kind == schedule[i].kind);
    CHECK(again[i].node == schedule[i].node);
  }
}

TEST_CASE("slices_to_json shape") {
  const CompGraph g = llama_block();
  const ojson j = slices_to_json(g, slice_model(g));
  CHECK(j.at("slices").size() == 2);
  CHECK(j.at("context_bytes_total").get<std::uint64_t>() == 16384);
  CHECK(j.at("slices")[1].at("context_in").size() == 1);
}
