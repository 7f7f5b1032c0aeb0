#include "disagg/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>

namespace disagg {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ValidationError(what); }

const std::map<std::string, NodeKind>& kind_names() {
  static const std::map<std::string, NodeKind> m = {
      {"input", NodeKind::input},           {"output", NodeKind::output},
      {"matmul", NodeKind::matmul},         {"attention", NodeKind::attention},
      {"elementwise", NodeKind::elementwise}, {"activation", NodeKind::activation},
      {"q_proj", NodeKind::q_proj},         {"k_proj", NodeKind::k_proj},
      {"v_proj", NodeKind::v_proj},         {"other", NodeKind::other},
  };
  return m;
}

}  // namespace

std::string to_string(NodeKind kind) {
  for (const auto& [name, k] : kind_names())
    if (k == kind) return name;
  return "other";
}

NodeKind node_kind_from_string(const std::string& s) {
  auto it = kind_names().find(s);
  if (it == kind_names().end()) fail("unknown node kind '" + s + "'");
  return it->second;
}

CompGraph::CompGraph(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  validate_and_index();
}

void CompGraph::validate_and_index() {
  const auto n = static_cast<std::int32_t>(nodes_.size());
  if (n == 0) fail("graph must contain at least one node");

  std::set<std::string> seen;
  for (const auto& node : nodes_) {
    if (node.id.empty()) fail("node id must be non-empty");
    if (!seen.insert(node.id).second) fail("duplicate node id '" + node.id + "'");
  }

  std::vector<std::int64_t> in_degree(nodes_.size(), 0), out_degree(nodes_.size(), 0);
  for (const auto& e : edges_) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
      fail("edge endpoint out of range");
    if (e.bytes == 0) fail("edge weights must be positive");
    out_degree[static_cast<std::size_t>(e.src)]++;
    in_degree[static_cast<std::size_t>(e.dst)]++;
  }

  // Kahn's algorithm; doubles as the cycle check. Smallest index first for
  // a deterministic order.
  std::vector<std::vector<std::int32_t>> adj(nodes_.size());
  for (const auto& e : edges_) adj[static_cast<std::size_t>(e.src)].push_back(e.dst);
  std::vector<std::int64_t> degree = in_degree;
  std::priority_queue<std::int32_t, std::vector<std::int32_t>, std::greater<>> ready;
  for (std::int32_t i = 0; i < n; ++i)
    if (degree[static_cast<std::size_t>(i)] == 0) ready.push(i);
  topo_.clear();
  while (!ready.empty()) {
    std::int32_t u = ready.top();
    ready.pop();
    topo_.push_back(u);
    for (std::int32_t v : adj[static_cast<std::size_t>(u)])
      if (--degree[static_cast<std::size_t>(v)] == 0) ready.push(v);
  }
  if (static_cast<std::int32_t>(topo_.size()) != n) fail("graph contains a cycle");

  std::int64_t sources = 0, sinks = 0;
  for (std::int32_t i = 0; i < n; ++i) {
    if (in_degree[static_cast<std::size_t>(i)] == 0) sources++;
    if (out_degree[static_cast<std::size_t>(i)] == 0) sinks++;
  }
  if (sources != 1) fail("graph must have exactly one input frontier node");
  if (sinks != 1) fail("graph must have exactly one output frontier node");
}

std::int32_t CompGraph::node_index(const std::string& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].id == id) return static_cast<std::int32_t>(i);
  throw LookupError("no node with id '" + id + "'");
}

std::vector<std::int32_t> CompGraph::predecessors(std::int32_t node) const {
  std::vector<std::int32_t> out;
  for (const auto& e : edges_)
    if (e.dst == node) out.push_back(e.src);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::int32_t> CompGraph::successors(std::int32_t node) const {
  std::vector<std::int32_t> out;
  for (const auto& e : edges_)
    if (e.src == node) out.push_back(e.dst);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::int32_t> CompGraph::attention_nodes() const {
  std::vector<std::int32_t> out;
  for (std::int32_t i : topo_)
    if (node(i).kind == NodeKind::attention) out.push_back(i);
  return out;
}

bool CompGraph::reaches(std::int32_t from, std::int32_t to) const {
  if (from == to) return true;
  std::vector<bool> seen(nodes_.size(), false);
  std::deque<std::int32_t> frontier{from};
  seen[static_cast<std::size_t>(from)] = true;
  while (!frontier.empty()) {
    std::int32_t u = frontier.front();
    frontier.pop_front();
    for (const auto& e : edges_) {
      if (e.src != u || seen[static_cast<std::size_t>(e.dst)]) continue;
      if (e.dst == to) return true;
      seen[static_cast<std::size_t>(e.dst)] = true;
      frontier.push_back(e.dst);
    }
  }
  return false;
}

CompGraph CompGraph::scaled(std::int64_t batch) const {
  if (batch < 1) fail("batch must be >= 1");
  std::vector<GraphEdge> edges = edges_;
  for (auto& e : edges) {
    const std::uint64_t b = static_cast<std::uint64_t>(batch);
    if (e.bytes > std::numeric_limits<std::uint64_t>::max() / b)
      fail("scaled edge weight overflows");
    e.bytes *= b;
  }
  return CompGraph(nodes_, std::move(edges));
}

CompGraph load_graph(const json& doc) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("edges"))
    fail("graph document must contain 'nodes' and 'edges'");

  std::vector<GraphNode> nodes;
  std::map<std::string, std::int32_t> index;
  for (const auto& jn : doc.at("nodes")) {
    GraphNode n;
    n.id = jn.at("id").get<std::string>();
    n.kind = node_kind_from_string(jn.at("kind").get<std::string>());
    if (jn.contains("label")) n.label = jn.at("label").get<std::string>();
    index.emplace(n.id, static_cast<std::int32_t>(nodes.size()));
    nodes.push_back(std::move(n));
  }

  std::vector<GraphEdge> edges;
  for (const auto& je : doc.at("edges")) {
    GraphEdge e;
    const std::string src = je.at("src").get<std::string>();
    const std::string dst = je.at("dst").get<std::string>();
    auto si = index.find(src);
    auto di = index.find(dst);
    if (si == index.end()) fail("edge references unknown node '" + src + "'");
    if (di == index.end()) fail("edge references unknown node '" + dst + "'");
    e.src = si->second;
    e.dst = di->second;
    if (!je.at("bytes").is_number() || je.at("bytes").get<double>() <= 0)
      fail("edge weights must be positive");
    e.bytes = je.at("bytes").get<std::uint64_t>();
    edges.push_back(e);
  }
  return CompGraph(std::move(nodes), std::move(edges));
}

CompGraph load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    fail(path + ": " + e.what());
  }
  return load_graph(doc);
}

ojson to_json(const CompGraph& g) {
  ojson j;
  ojson nodes = ojson::array();
  for (const auto& n : g.nodes()) {
    ojson jn{{"id", n.id}, {"kind", to_string(n.kind)}};
    if (!n.label.empty()) jn["label"] = n.label;
    nodes.push_back(std::move(jn));
  }
  ojson edges = ojson::array();
  for (const auto& e : g.edges())
    edges.push_back(ojson{{"src", g.node(e.src).id}, {"dst", g.node(e.dst).id}, {"bytes", e.bytes}});
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  return j;
}

// ---- max-flow min-cut ----------------------------------------------------

namespace {

// Capacity-scaling augmenting paths. Graphs here are tiny, so the point is
// determinism and exact uint64 arithmetic, not asymptotics.
class MaxFlow {
 public:
  explicit MaxFlow(std::int32_t n) : adj_(static_cast<std::size_t>(n)) {}

  void add_arc(std::int32_t u, std::int32_t v, std::uint64_t cap, std::uint64_t rev_cap) {
    adj_[static_cast<std::size_t>(u)].push_back(
        {v, static_cast<std::int32_t>(adj_[static_cast<std::size_t>(v)].size()), cap});
    adj_[static_cast<std::size_t>(v)].push_back(
        {u, static_cast<std::int32_t>(adj_[static_cast<std::size_t>(u)].size()) - 1, rev_cap});
  }

  std::uint64_t run(std::int32_t s, std::int32_t t, std::uint64_t flow_cap) {
    std::uint64_t max_cap = 0;
    for (const auto& arcs : adj_)
      for (const auto& a : arcs) max_cap = std::max(max_cap, a.cap);
    std::uint64_t delta = 1;
    while (delta <= max_cap / 2) delta *= 2;

    std::uint64_t flow = 0;
    for (; delta > 0; delta /= 2) {
      while (flow <= flow_cap) {
        std::uint64_t pushed = augment(s, t, delta);
        if (pushed == 0) break;
        flow += pushed;
      }
      if (flow > flow_cap) break;  // caller treats this as "not separable"
    }
    return flow;
  }

  std::vector<bool> residual_reachable(std::int32_t s) const {
    std::vector<bool> seen(adj_.size(), false);
    std::deque<std::int32_t> frontier{s};
    seen[static_cast<std::size_t>(s)] = true;
    while (!frontier.empty()) {
      std::int32_t u = frontier.front();
      frontier.pop_front();
      for (const auto& a : adj_[static_cast<std::size_t>(u)]) {
        if (a.cap > 0 && !seen[static_cast<std::size_t>(a.to)]) {
          seen[static_cast<std::size_t>(a.to)] = true;
          frontier.push_back(a.to);
        }
      }
    }
    return seen;
  }

 private:
  struct Arc {
    std::int32_t to;
    std::int32_t rev;
    std::uint64_t cap;
  };

  std::uint64_t augment(std::int32_t s, std::int32_t t, std::uint64_t delta) {
    // BFS for a shortest augmenting path using arcs with residual >= delta.
    std::vector<std::pair<std::int32_t, std::int32_t>> parent(adj_.size(), {-1, -1});
    std::deque<std::int32_t> frontier{s};
    parent[static_cast<std::size_t>(s)] = {s, -1};
    while (!frontier.empty() && parent[static_cast<std::size_t>(t)].first < 0) {
      std::int32_t u = frontier.front();
      frontier.pop_front();
      const auto& arcs = adj_[static_cast<std::size_t>(u)];
      for (std::int32_t i = 0; i < static_cast<std::int32_t>(arcs.size()); ++i) {
        const Arc& a = arcs[static_cast<std::size_t>(i)];
        if (a.cap >= delta && parent[static_cast<std::size_t>(a.to)].first < 0) {
          parent[static_cast<std::size_t>(a.to)] = {u, i};
          frontier.push_back(a.to);
        }
      }
    }
    if (parent[static_cast<std::size_t>(t)].first < 0) return 0;

    std::uint64_t bottleneck = std::numeric_limits<std::uint64_t>::max();
    for (std::int32_t v = t; v != s;) {
      auto [u, i] = parent[static_cast<std::size_t>(v)];
      bottleneck = std::min(bottleneck, adj_[static_cast<std::size_t>(u)][static_cast<std::size_t>(i)].cap);
      v = u;
    }
    for (std::int32_t v = t; v != s;) {
      auto [u, i] = parent[static_cast<std::size_t>(v)];
      Arc& fwd = adj_[static_cast<std::size_t>(u)][static_cast<std::size_t>(i)];
      fwd.cap -= bottleneck;
      adj_[static_cast<std::size_t>(fwd.to)][static_cast<std::size_t>(fwd.rev)].cap += bottleneck;
      v = u;
    }
    return bottleneck;
  }

  std::vector<std::vector<Arc>> adj_;
};

CutResult min_cut_impl(const CompGraph& g, std::int32_t attn,
                       const std::vector<std::int32_t>& extra_s_side) {
  if (g.node(attn).kind != NodeKind::attention)
    throw ValidationError("min_cut_at requires an attention node, got '" +
                          to_string(g.node(attn).kind) + "'");

  // Sentinel above any finite cut; keeps all arithmetic exact in uint64.
  std::uint64_t finite_total = 0;
  for (const auto& e : g.edges()) finite_total += e.bytes;
  const std::uint64_t inf = finite_total + 1;

  const auto n = static_cast<std::int32_t>(g.nodes().size());
  const std::int32_t source = n, sink = n + 1;
  MaxFlow flow(n + 2);

  // Original edge (u,v,w): forward capacity w, reverse capacity unbounded.
  // An unbounded reverse arc makes any cut that puts u on the t-side and v
  // on the s-side infinitely expensive, which is exactly the prefix
  // constraint (s-side closed under ancestors).
  for (const auto& e : g.edges()) {
    if (e.src == attn || e.dst == attn) continue;
    flow.add_arc(e.src, e.dst, e.bytes, inf);
  }
  for (std::int32_t p : g.predecessors(attn)) flow.add_arc(source, p, inf, 0);
  for (std::int32_t s : g.successors(attn)) flow.add_arc(s, sink, inf, 0);
  for (std::int32_t forced : extra_s_side)
    if (forced != attn) flow.add_arc(source, forced, inf, 0);

  const std::uint64_t value = flow.run(source, sink, finite_total);
  if (value > finite_total)
    throw Error("attention predecessors and successors are not separable (malformed graph)");

  // Canonical minimal s-side: residual reachability from the source.
  const std::vector<bool> reach = flow.residual_reachable(source);
  CutResult cut;
  cut.cut_weight = value;
  for (std::int32_t i = 0; i < n; ++i) {
    if (i == attn) continue;
    (reach[static_cast<std::size_t>(i)] ? cut.s_side : cut.t_side).push_back(i);
  }
  const auto& edges = g.edges();
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(edges.size()); ++i) {
    const auto& e = edges[static_cast<std::size_t>(i)];
    if (e.src == attn || e.dst == attn) continue;
    if (reach[static_cast<std::size_t>(e.src)] && !reach[static_cast<std::size_t>(e.dst)])
      cut.cut_edges.push_back(i);
  }
  std::uint64_t crossing = 0;
  for (std::int32_t i : cut.cut_edges) crossing += edges[static_cast<std::size_t>(i)].bytes;
  if (crossing != value) throw Error("max-flow / cut mismatch (internal)");
  return cut;
}

}  // namespace

CutResult min_cut_at(const CompGraph& g, std::int32_t attention_node) {
  return min_cut_impl(g, attention_node, {});
}

CutResult min_cut_at(const CompGraph& g, const std::string& attention_node_id) {
  return min_cut_at(g, g.node_index(attention_node_id));
}

std::vector<ModelSlice> slice_model(const CompGraph& g) {
  const std::vector<std::int32_t> attn = g.attention_nodes();
  std::vector<ModelSlice> slices;

  if (attn.empty()) {
    ModelSlice all;
    all.index = 0;
    all.ops = g.topo_order();
    slices.push_back(std::move(all));
    return slices;
  }

  // The iteration below pins each cut's s-side into the next cut, which is
  // only meaningful if every attention op reaches the next one.
  for (std::size_t i = 0; i + 1 < attn.size(); ++i)
    if (!g.reaches(attn[i], attn[i + 1]))
      throw Error("attention operators are not totally ordered; unsupported graph");

  std::vector<CutResult> cuts;
  std::vector<std::int32_t> pinned;
  for (std::size_t k = 0; k < attn.size(); ++k) {
    CutResult cut = min_cut_impl(g, attn[k], pinned);
    pinned = cut.s_side;
    // Earlier attention ops sit inside later s-sides; pin them explicitly
    // so membership below is purely set difference.
    for (std::size_t j = 0; j <= k; ++j) pinned.push_back(attn[j]);
    cuts.push_back(std::move(cut));
  }

  // slice 0 = s-side of cut 0; slice k = s-side(k) \ s-side(k-1). The
  // s-sides nest, so each node's slice is the first cut whose s-side holds
  // it. Attention op k lives at the head of slice k+1.
  std::vector<std::int32_t> slice_of(g.nodes().size(), static_cast<std::int32_t>(attn.size()));
  for (std::size_t k = cuts.size(); k-- > 0;) {
    for (std::int32_t v : cuts[k].s_side)
      slice_of[static_cast<std::size_t>(v)] = std::min(slice_of[static_cast<std::size_t>(v)],
                                                       static_cast<std::int32_t>(k));
  }
  for (std::size_t k = 0; k < attn.size(); ++k)
    slice_of[static_cast<std::size_t>(attn[k])] = static_cast<std::int32_t>(k) + 1;

  slices.resize(attn.size() + 1);
  for (std::size_t k = 0; k < slices.size(); ++k)
    slices[k].index = static_cast<std::int32_t>(k);
  for (std::int32_t v : g.topo_order())
    slices[static_cast<std::size_t>(slice_of[static_cast<std::size_t>(v)])].ops.push_back(v);
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    slices[k].context_out = cuts[k].cut_edges;
    slices[k + 1].context_in = cuts[k].cut_edges;
  }
  return slices;
}

std::vector<ScheduleItem> schedule_slice(const CompGraph& g, const ModelSlice& slice) {
  std::set<std::int32_t> members(slice.ops.begin(), slice.ops.end());

  // In-slice ancestor closure of every q_proj node.
  std::set<std::int32_t> q_closure;
  for (std::int32_t v : slice.ops) {
    if (g.node(v).kind != NodeKind::q_proj) continue;
    std::deque<std::int32_t> frontier{v};
    while (!frontier.empty()) {
      std::int32_t u = frontier.front();
      frontier.pop_front();
      if (!q_closure.insert(u).second) continue;
      for (const auto& e : g.edges())
        if (e.dst == u && members.count(e.src)) frontier.push_back(e.src);
    }
  }

  // Kahn over the induced subgraph. Ready set ordered by (outside q-closure,
  // node id): the closure drains first, ids break ties.
  std::map<std::int32_t, std::int64_t> in_degree;
  for (std::int32_t v : slice.ops) in_degree[v] = 0;
  for (const auto& e : g.edges())
    if (members.count(e.src) && members.count(e.dst)) in_degree[e.dst]++;

  auto priority = [&](std::int32_t v) {
    return std::make_pair(q_closure.count(v) ? 0 : 1, g.node(v).id);
  };
  std::set<std::pair<std::pair<int, std::string>, std::int32_t>> ready;
  for (const auto& [v, deg] : in_degree)
    if (deg == 0) ready.insert({priority(v), v});

  std::vector<ScheduleItem> out;
  std::int32_t last_q_pos = -1;
  while (!ready.empty()) {
    auto it = ready.begin();
    std::int32_t v = it->second;
    ready.erase(it);
    out.push_back({ScheduleItem::Kind::op, v});
    if (g.node(v).kind == NodeKind::q_proj)
      last_q_pos = static_cast<std::int32_t>(out.size()) - 1;
    for (const auto& e : g.edges()) {
      if (e.src != v || !members.count(e.dst)) continue;
      if (--in_degree[e.dst] == 0) ready.insert({priority(e.dst), e.dst});
    }
  }
  if (out.size() != slice.ops.size()) throw Error("slice subgraph is cyclic (internal)");

  if (last_q_pos >= 0)
    out.insert(out.begin() + last_q_pos + 1, {ScheduleItem::Kind::send_q, -1});
  out.push_back({ScheduleItem::Kind::send_kv, -1});
  return out;
}

ojson slices_to_json(const CompGraph& g, const std::vector<ModelSlice>& slices) {
  auto edge_json = [&](std::int32_t ei) {
    const auto& e = g.edges()[static_cast<std::size_t>(ei)];
    return ojson{{"src", g.node(e.src).id}, {"dst", g.node(e.dst).id}, {"bytes", e.bytes}};
  };
  ojson out;
  ojson arr = ojson::array();
  std::uint64_t context_total = 0;
  for (const auto& s : slices) {
    ojson js;
    js["index"] = s.index;
    ojson ops = ojson::array();
    for (std::int32_t v : s.ops) ops.push_back(g.node(v).id);
    js["ops"] = std::move(ops);
    ojson cin = ojson::array(), cout = ojson::array();
    for (std::int32_t ei : s.context_in) cin.push_back(edge_json(ei));
    for (std::int32_t ei : s.context_out) {
      cout.push_back(edge_json(ei));
      context_total += g.edges()[static_cast<std::size_t>(ei)].bytes;
    }
    js["context_in"] = std::move(cin);
    js["context_out"] = std::move(cout);
    ojson sched = ojson::array();
    for (const auto& item : schedule_slice(g, s)) {
      switch (item.kind) {
        case ScheduleItem::Kind::op:
          sched.push_back(ojson{{"op", g.node(item.node).id}});
          break;
        case ScheduleItem::Kind::send_q:
          sched.push_back(ojson{{"marker", "send Q"}});
          break;
        case ScheduleItem::Kind::send_kv:
          sched.push_back(ojson{{"marker", "send KV"}});
          break;
      }
    }
    js["schedule"] = std::move(sched);
    arr.push_back(std::move(js));
  }
  out["slices"] = std::move(arr);
  out["context_bytes_total"] = context_total;
  return out;
}

}  // namespace disagg
