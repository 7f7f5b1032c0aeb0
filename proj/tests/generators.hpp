#pragma once

// Shared random-input generators for tests and the acceptance suite.

#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "disagg/attention.hpp"
#include "disagg/graph.hpp"

namespace gen {

// Random attention instance with logits reaching the requested magnitude.
// Half the key rows are aligned with the query so their dot products hit
// chosen logits exactly (including the extremes); the rest are generic.
inline disagg::AttnInstance<double> random_instance(std::mt19937_64& rng, std::int64_t d_head,
                                                    std::int64_t l, double logit_limit) {
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (double(rng() >> 11) * 0x1p-53);
  };
  disagg::AttnInstance<double> inst;
  inst.scale = 1.0 / std::sqrt(double(d_head));
  inst.query.resize(size_t(d_head));
  for (auto& x : inst.query) x = uniform(-1, 1);
  double qq = 0;
  for (double x : inst.query) qq += x * x;

  inst.keys.resize(size_t(l));
  inst.values.resize(size_t(l));
  for (std::int64_t j = 0; j < l; ++j) {
    auto& k = inst.keys[size_t(j)];
    auto& v = inst.values[size_t(j)];
    k.resize(size_t(d_head));
    v.resize(size_t(d_head));
    for (auto& x : v) x = uniform(-1, 1);
    if (j % 2 == 0 && qq > 1e-9) {
      const double target = uniform(-logit_limit, logit_limit);
      const double factor = target / (inst.scale * qq);
      for (size_t i = 0; i < k.size(); ++i) k[i] = factor * inst.query[i];
    } else {
      for (auto& x : k) x = uniform(-2, 2);
    }
  }
  return inst;
}

inline std::vector<std::vector<std::int64_t>> random_partition(std::mt19937_64& rng,
                                                               std::int64_t l,
                                                               std::int64_t parts) {
  std::vector<std::vector<std::int64_t>> out(static_cast<std::size_t>(parts));
  for (std::int64_t t = 0; t < l; ++t) out[rng() % std::uint64_t(parts)].push_back(t);
  return out;
}

// Random DAG sized for exhaustive cut enumeration: node 0 is the input,
// n-1 the output, one attention node in between, edges only forward, every
// interior node reachable and co-reachable.
inline disagg::CompGraph random_dag(std::mt19937_64& rng, std::int32_t n) {
  using disagg::GraphEdge;
  using disagg::GraphNode;
  using disagg::NodeKind;

  std::vector<GraphNode> nodes;
  const std::int32_t attn = 1 + std::int32_t(rng() % std::uint64_t(n - 2));
  for (std::int32_t i = 0; i < n; ++i) {
    GraphNode node;
    node.id = "n" + std::to_string(i);
    node.kind = i == 0       ? NodeKind::input
                : i == n - 1 ? NodeKind::output
                : i == attn  ? NodeKind::attention
                             : NodeKind::other;
    nodes.push_back(node);
  }
  std::set<std::pair<std::int32_t, std::int32_t>> used;
  std::vector<GraphEdge> edges;
  auto add_edge = [&](std::int32_t u, std::int32_t v) {
    if (u == v || !used.insert({u, v}).second) return;
    edges.push_back({u, v, 1 + rng() % 1000});
  };
  for (std::int32_t v = 1; v < n; ++v) add_edge(std::int32_t(rng() % std::uint64_t(v)), v);
  for (std::int32_t u = 0; u + 1 < n; ++u)
    add_edge(u, u + 1 + std::int32_t(rng() % std::uint64_t(n - u - 1)));
  const std::int64_t extra = std::int64_t(rng() % 8);
  for (std::int64_t i = 0; i < extra; ++i) {
    const std::int32_t u = std::int32_t(rng() % std::uint64_t(n - 1));
    add_edge(u, u + 1 + std::int32_t(rng() % std::uint64_t(n - u - 1)));
  }
  return disagg::CompGraph(std::move(nodes), std::move(edges));
}

}  // namespace gen
