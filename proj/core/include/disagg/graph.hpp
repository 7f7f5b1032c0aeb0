#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "disagg/model.hpp"

namespace disagg {

// Weighted operator DAG of one model, and its partition into slices at the
// attention operators. Edge weights are bytes (the tensor crossing that
// edge); cuts are computed with exact integer arithmetic.

enum class NodeKind {
  input,
  output,
  matmul,
  attention,
  elementwise,
  activation,
  q_proj,
  k_proj,
  v_proj,
  other,
};

std::string to_string(NodeKind kind);
NodeKind node_kind_from_string(const std::string& s);

struct GraphNode {
  std::string id;
  NodeKind kind = NodeKind::other;
  std::string label;
};

struct GraphEdge {
  std::int32_t src = 0;  // node index
  std::int32_t dst = 0;
  std::uint64_t bytes = 0;
};

class CompGraph {
 public:
  CompGraph() = default;
  CompGraph(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges);

  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  std::int32_t node_index(const std::string& id) const;  // throws LookupError
  const GraphNode& node(std::int32_t i) const { return nodes_[static_cast<std::size_t>(i)]; }

  std::vector<std::int32_t> predecessors(std::int32_t node) const;
  std::vector<std::int32_t> successors(std::int32_t node) const;
  // Node indices in a deterministic topological order.
  const std::vector<std::int32_t>& topo_order() const { return topo_; }
  std::vector<std::int32_t> attention_nodes() const;  // in topological order
  bool reaches(std::int32_t from, std::int32_t to) const;

  // Same topology with every weight multiplied by batch (per-token symbolic
  // weights -> runtime sizes).
  CompGraph scaled(std::int64_t batch) const;

 private:
  void validate_and_index();  // cycle check, dangling edges, frontier shape

  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<std::int32_t> topo_;
};

CompGraph load_graph(const json& doc);
CompGraph load_graph_file(const std::string& path);
ojson to_json(const CompGraph& g);

// A minimum-weight edge set separating an attention operator's predecessors
// from its successors in the graph with that operator removed, subject to
// the prefix constraint (no original edge may run t-side -> s-side, i.e.
// the s-side is closed under ancestors).
struct CutResult {
  std::vector<std::int32_t> cut_edges;  // indices into CompGraph::edges()
  std::uint64_t cut_weight = 0;
  std::vector<std::int32_t> s_side;  // sorted node indices; attention node in neither
  std::vector<std::int32_t> t_side;
};

CutResult min_cut_at(const CompGraph& g, const std::string& attention_node_id);
CutResult min_cut_at(const CompGraph& g, std::int32_t attention_node);

// One contiguous segment of the model between consecutive attention
// operators. Slice k > 0 begins with attention operator k; context edges are
// the min-cut edges that must persist across the boundary.
struct ModelSlice {
  std::int32_t index = 0;
  std::vector<std::int32_t> ops;         // topologically ordered node indices
  std::vector<std::int32_t> context_in;  // edge indices; empty for slice 0
  std::vector<std::int32_t> context_out; // empty for the last slice
};

// n attention operators -> n + 1 slices covering every node exactly once.
// Requires the attention operators to be totally ordered (each reaches the
// next); cuts are computed left to right with earlier s-sides pinned, so
// slice boundaries nest.
std::vector<ModelSlice> slice_model(const CompGraph& g);

// Execution order for one slice: Q-Proj and its in-slice ancestor closure
// first, then the rest; "send Q" immediately after the (last) Q-Proj,
// "send KV" at the end. Deterministic, ties broken by node id.
struct ScheduleItem {
  enum class Kind { op, send_q, send_kv };
  Kind kind = Kind::op;
  std::int32_t node = -1;  // valid when kind == op
};

std::vector<ScheduleItem> schedule_slice(const CompGraph& g, const ModelSlice& slice);

ojson slices_to_json(const CompGraph& g, const std::vector<ModelSlice>& slices);

}  // namespace disagg
