#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "disagg/attention.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace disagg;
using gen::random_instance;
using gen::random_partition;

namespace {

std::vector<std::int64_t> all_indices(std::int64_t l) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(l));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

TEST_CASE("singleton softmax returns the value row exactly") {
  std::mt19937_64 rng(1);
  const AttnInstance<double> inst = random_instance(rng, 8, 1, 5);
  const std::vector<double> out = exact_attention(inst);
  for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == inst.values[0][i]);
}

TEST_CASE("equal logits give the unweighted mean of value rows") {
  AttnInstance<double> inst;
  inst.scale = 0.5;
  inst.query = {0, 0, 0, 0};  // every logit is 0
  for (int j = 0; j < 5; ++j) {
    inst.keys.push_back({1.0 * j, 2.0, -1.0, 0.5});
    inst.values.push_back({1.0 * j, j * j * 1.0, -j * 1.0, 1.0});
  }
  const std::vector<double> out = exact_attention(inst);
  for (size_t i = 0; i < 4; ++i) {
    double mean = 0;
    for (int j = 0; j < 5; ++j) mean += inst.values[size_t(j)][i];
    mean /= 5;
    CHECK(out[i] == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("exact_attention matches the extended-precision oracle") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const AttnInstance<double> inst = random_instance(rng, 8, 16, 10);
    CHECK(oracle::max_rel_error(exact_attention(inst), oracle::attention_naive(inst)) <= 1e-6);
  }
  CHECK_THROWS_AS(exact_attention(AttnInstance<double>{{1.0}, {}, {}, 1.0}), Error);
}

TEST_CASE("partial over the empty set is the identity") {
  std::mt19937_64 rng(2);
  const AttnInstance<double> inst = random_instance(rng, 8, 16, 5);
  const auto p = partial_attention<double>(inst, {});
  CHECK(p.empty());
  CHECK(p.token_count == 0);
  CHECK(p.log_denom == -std::numeric_limits<double>::infinity());
  for (double x : p.acc) CHECK(x == 0.0);
  CHECK_THROWS_AS(finalize(p), Error);
}

TEST_CASE("partial over all tokens finalizes to exact_attention") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const AttnInstance<double> inst = random_instance(rng, 16, 64, 40);
    const auto p = partial_attention<double>(inst, all_indices(inst.length()));
    CHECK(oracle::max_rel_error(finalize(p), exact_attention(inst)) <= 1e-6);
  }
}

TEST_CASE("singleton partial points along its value row") {
  std::mt19937_64 rng(4);
  const AttnInstance<double> inst = random_instance(rng, 8, 16, 5);
  const std::vector<std::int64_t> idx{7};
  const auto p = partial_attention<double>(inst, idx);
  const std::vector<double> out = finalize(p);
  for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == inst.values[7][i]);
}

TEST_CASE("merge identity law is bitwise") {
  std::mt19937_64 rng(5);
  const AttnInstance<double> inst = random_instance(rng, 8, 32, 20);
  const auto p = partial_attention<double>(inst, all_indices(16));
  const auto id = PartialAttention<double>::identity(8);
  for (const auto& m : {merge(p, id), merge(id, p)}) {
    CHECK(m.max_logit == p.max_logit);
    CHECK(m.log_denom == p.log_denom);
    CHECK(m.token_count == p.token_count);
    for (size_t i = 0; i < m.acc.size(); ++i) CHECK(m.acc[i] == p.acc[i]);
  }
}

TEST_CASE("merge laws over randomized splits (criterion-grade)") {
  std::mt19937_64 rng(6);
  double worst_pair = 0, worst_tree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::int64_t d_head = 1 + std::int64_t(rng() % 64);
    const std::int64_t l = 2 + std::int64_t(rng() % 255);
    const std::int64_t parts = 2 + std::int64_t(rng() % 7);  // up to 8 partitions
    const AttnInstance<double> inst = random_instance(rng, d_head, l, 80);
    const std::vector<double> exact = exact_attention(inst);

    const auto partition = random_partition(rng, l, parts);
    std::vector<PartialAttention<double>> partials;
    for (const auto& part : partition)
      partials.push_back(partial_attention<double>(inst, part));

    // Left fold, then the reversed fold: commutativity up to rounding.
    auto fold = [&](bool reversed) {
      auto acc = PartialAttention<double>::identity(d_head);
      if (reversed)
        for (auto it = partials.rbegin(); it != partials.rend(); ++it) acc = merge(acc, *it);
      else
        for (const auto& p : partials) acc = merge(acc, p);
      return acc;
    };
    const std::vector<double> a = finalize(fold(false));
    const std::vector<double> b = finalize(fold(true));
    worst_pair = std::max(worst_pair, oracle::max_rel_error(a, b));
    worst_tree = std::max(worst_tree, oracle::max_rel_error(a, exact));
  }
  CHECK(worst_pair <= 1e-7);
  CHECK(worst_tree <= 1e-6);
}

TEST_CASE("adversarial logits at +-80 do not overflow") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    AttnInstance<double> inst = random_instance(rng, 8, 64, 80);
    const auto p = partial_attention<double>(inst, all_indices(inst.length()));
    CHECK(std::isfinite(p.log_denom));
    CHECK(std::isfinite(p.max_logit));
    const std::vector<double> out = finalize(p);
    for (double x : out) CHECK(std::isfinite(x));
    CHECK(oracle::max_rel_error(out, oracle::attention_naive(inst)) <= 1e-6);
  }
}

TEST_CASE("output is a convex combination of value rows") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    AttnInstance<double> inst = random_instance(rng, 8, 32, 30);
    for (auto& row : inst.values)
      for (auto& x : row) x = std::abs(x);  // values in [0, 1]
    for (double x : exact_attention(inst)) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("split_prev_new") {
  std::mt19937_64 rng(9);
  const AttnInstance<double> inst = random_instance(rng, 8, 32, 20);

  auto [prev_all, new_none] = split_prev_new(inst, inst.length());
  CHECK(new_none.empty());
  CHECK(prev_all.token_count == inst.length());

  auto [prev_none, new_all] = split_prev_new(inst, 0);
  CHECK(prev_none.empty());

  auto [prev, fresh] = split_prev_new(inst, inst.length() - 1);
  CHECK(fresh.token_count == 1);
  CHECK(oracle::max_rel_error(finalize(merge(prev, fresh)), exact_attention(inst)) <= 1e-6);

  CHECK_THROWS_AS(split_prev_new(inst, -1), Error);
  CHECK_THROWS_AS(split_prev_new(inst, inst.length() + 1), Error);
}

TEST_CASE("float32 mode stays within loose tolerances") {
  std::mt19937_64 rng(10);
  AttnInstance<float> inst;
  inst.scale = 1.0f / std::sqrt(8.0f);
  auto uniform = [&] { return float(double(rng() >> 11) * 0x1p-53 * 2 - 1); };
  inst.query.resize(8);
  for (auto& x : inst.query) x = uniform();
  for (int j = 0; j < 32; ++j) {
    std::vector<float> k(8), v(8);
    for (auto& x : k) x = uniform();
    for (auto& x : v) x = uniform();
    inst.keys.push_back(k);
    inst.values.push_back(v);
  }
  std::vector<std::int64_t> idx(32);
  std::iota(idx.begin(), idx.end(), 0);
  const auto p = partial_attention<float>(inst, idx);
  const std::vector<float> got = finalize(p);
  const std::vector<float> want = exact_attention(inst);
  for (size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-4));
}

TEST_CASE("head_partition") {
  const auto ranges = head_partition(8, 4);
  REQUIRE(ranges.size() == 4);
  for (size_t d = 0; d < 4; ++d) {
    CHECK(ranges[d].begin == std::int64_t(2 * d));
    CHECK(ranges[d].end == std::int64_t(2 * d + 2));
  }
  CHECK_THROWS_WITH_AS(head_partition(8, 3), doctest::Contains("divisible"), ValidationError);
}

TEST_CASE("head partitioning composes exactly and GQA grouping is exact") {
  std::mt19937_64 rng(11);
  auto uniform = [&] { return double(rng() >> 11) * 0x1p-53 * 2 - 1; };

  MultiHeadInstance<double> inst;
  inst.scale = 1.0 / std::sqrt(4.0);
  const std::int64_t q_heads = 8, kv_heads = 4, l = 12, d_head = 4;
  for (std::int64_t h = 0; h < q_heads; ++h) {
    std::vector<double> q(static_cast<std::size_t>(d_head));
    for (auto& x : q) x = uniform();
    inst.queries.push_back(q);
  }
  for (std::int64_t h = 0; h < kv_heads; ++h) {
    std::vector<std::vector<double>> keys, values;
    for (std::int64_t t = 0; t < l; ++t) {
      std::vector<double> k(static_cast<std::size_t>(d_head)), v(static_cast<std::size_t>(d_head));
      for (auto& x : k) x = uniform();
      for (auto& x : v) x = uniform();
      keys.push_back(k);
      values.push_back(v);
    }
    inst.kv_keys.push_back(keys);
    inst.kv_values.push_back(values);
  }

  const auto full = multi_head_attention(inst);

  // Device-partitioned heads, concatenated back: identical outputs.
  const auto ranges = head_partition(kv_heads, 2);
  const std::int64_t group = q_heads / kv_heads;
  std::vector<std::vector<double>> stitched(static_cast<std::size_t>(q_heads));
  for (const auto& r : ranges) {
    MultiHeadInstance<double> shard;
    shard.scale = inst.scale;
    for (std::int64_t kv = r.begin; kv < r.end; ++kv) {
      shard.kv_keys.push_back(inst.kv_keys[size_t(kv)]);
      shard.kv_values.push_back(inst.kv_values[size_t(kv)]);
      for (std::int64_t g = 0; g < group; ++g)
        shard.queries.push_back(inst.queries[size_t(kv * group + g)]);
    }
    const auto out = multi_head_attention(shard);
    for (std::int64_t i = 0; i < std::int64_t(out.size()); ++i)
      stitched[size_t(r.begin * group + i)] = out[size_t(i)];
  }
  REQUIRE(stitched.size() == full.size());
  for (size_t h = 0; h < full.size(); ++h)
    for (size_t i = 0; i < full[h].size(); ++i) CHECK(stitched[h][i] == full[h][i]);

  // Replicating each KV head G times (MHA layout) gives the same result.
  MultiHeadInstance<double> replicated;
  replicated.scale = inst.scale;
  replicated.queries = inst.queries;
  for (std::int64_t h = 0; h < q_heads; ++h) {
    replicated.kv_keys.push_back(inst.kv_keys[size_t(h / group)]);
    replicated.kv_values.push_back(inst.kv_values[size_t(h / group)]);
  }
  const auto rep = multi_head_attention(replicated);
  for (size_t h = 0; h < full.size(); ++h)
    for (size_t i = 0; i < full[h].size(); ++i) CHECK(rep[h][i] == full[h][i]);
}

TEST_CASE("request_partition") {
  const std::vector<double> equal(8, 100.0);
  CHECK(request_partition(equal, 4).imbalance == doctest::Approx(1.0));

  const std::vector<double> skewed{8192, 128, 128, 128};
  const RequestAssignment a = request_partition(skewed, 2);
  CHECK(a.imbalance == doctest::Approx(8192.0 / 4288.0).epsilon(1e-12));
  CHECK(a.device_load[a.device_of[0]] == 8192.0);  // the long request sits alone

  const std::vector<double> one{512.0};
  CHECK(request_partition(one, 6).imbalance == doctest::Approx(6.0));
}
