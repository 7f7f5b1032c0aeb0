#include "disagg/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace disagg {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

template <typename T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

template <typename T>
void AttnInstance<T>::validate() const {
  require(!query.empty(), "query must be non-empty");
  require(keys.size() == values.size(), "keys and values must have equal row counts");
  for (const auto& row : keys)
    require(row.size() == query.size(), "key rows must match head dim");
  for (const auto& row : values)
    require(row.size() == query.size(), "value rows must match head dim");
  auto finite = [](const std::vector<T>& v) {
    return std::all_of(v.begin(), v.end(), [](T x) { return std::isfinite(double(x)); });
  };
  require(finite(query), "query entries must be finite");
  for (const auto& row : keys) require(finite(row), "key entries must be finite");
  for (const auto& row : values) require(finite(row), "value entries must be finite");
}

template <typename T>
PartialAttention<T> PartialAttention<T>::identity(std::int64_t head_dim) {
  PartialAttention<T> p;
  p.acc.assign(static_cast<std::size_t>(head_dim), T(0));
  return p;
}

template <typename T>
std::vector<T> exact_attention(const AttnInstance<T>& inst) {
  if (inst.length() == 0) throw Error("exact_attention requires a non-empty key set");
  const std::size_t l = inst.keys.size();
  const std::size_t d = inst.query.size();

  std::vector<T> logits(l);
  T max_logit = -std::numeric_limits<T>::infinity();
  for (std::size_t j = 0; j < l; ++j) {
    logits[j] = dot(inst.query, inst.keys[j]) * inst.scale;
    max_logit = std::max(max_logit, logits[j]);
  }

  std::vector<T> out(d, T(0));
  T denom = 0;
  for (std::size_t j = 0; j < l; ++j) {
    const T w = std::exp(logits[j] - max_logit);
    denom += w;
    for (std::size_t i = 0; i < d; ++i) out[i] += w * inst.values[j][i];
  }
  for (std::size_t i = 0; i < d; ++i) out[i] /= denom;
  return out;
}

template <typename T>
PartialAttention<T> partial_attention(const AttnInstance<T>& inst,
                                      std::span<const std::int64_t> indices) {
  auto p = PartialAttention<T>::identity(inst.head_dim());
  if (indices.empty()) return p;

  T max_logit = -std::numeric_limits<T>::infinity();
  std::vector<T> logits(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto j = indices[k];
    if (j < 0 || j >= inst.length()) throw Error("token index out of range");
    logits[k] = dot(inst.query, inst.keys[static_cast<std::size_t>(j)]) * inst.scale;
    max_logit = std::max(max_logit, logits[k]);
  }

  T denom = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const T w = std::exp(logits[k] - max_logit);
    denom += w;
    const auto& v = inst.values[static_cast<std::size_t>(indices[k])];
    for (std::size_t i = 0; i < p.acc.size(); ++i) p.acc[i] += w * v[i];
  }
  p.max_logit = max_logit;
  p.log_denom = std::log(denom);
  p.token_count = static_cast<std::int64_t>(indices.size());
  return p;
}

template <typename T>
PartialAttention<T> merge(const PartialAttention<T>& a, const PartialAttention<T>& b) {
  // Identity early-outs keep the -inf shifts out of the arithmetic and make
  // merge(p, identity) preserve p bitwise.
  if (a.empty()) return b;
  if (b.empty()) return a;
  require(a.acc.size() == b.acc.size(), "partials must share a head dim");

  PartialAttention<T> out;
  out.max_logit = std::max(a.max_logit, b.max_logit);
  out.token_count = a.token_count + b.token_count;
  const T wa = std::exp(a.max_logit - out.max_logit);  // <= 1
  const T wb = std::exp(b.max_logit - out.max_logit);
  out.acc.resize(a.acc.size());
  for (std::size_t i = 0; i < a.acc.size(); ++i) out.acc[i] = wa * a.acc[i] + wb * b.acc[i];
  const T denom = wa * std::exp(a.log_denom) + wb * std::exp(b.log_denom);
  out.log_denom = std::log(denom);
  return out;
}

template <typename T>
std::vector<T> finalize(const PartialAttention<T>& p) {
  if (p.empty()) throw Error("cannot finalize an empty partial");
  const T denom = std::exp(p.log_denom);
  std::vector<T> out(p.acc.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = p.acc[i] / denom;
  return out;
}

template <typename T>
std::pair<PartialAttention<T>, PartialAttention<T>> split_prev_new(const AttnInstance<T>& inst,
                                                                   std::int64_t boundary) {
  if (boundary < 0 || boundary > inst.length())
    throw Error("split boundary out of range");
  std::vector<std::int64_t> prev(static_cast<std::size_t>(boundary));
  std::iota(prev.begin(), prev.end(), std::int64_t{0});
  std::vector<std::int64_t> fresh(static_cast<std::size_t>(inst.length() - boundary));
  std::iota(fresh.begin(), fresh.end(), boundary);
  return {partial_attention<T>(inst, prev), partial_attention<T>(inst, fresh)};
}

template <typename T>
AttnInstance<T> MultiHeadInstance<T>::head_instance(std::int64_t query_head) const {
  const std::int64_t group = num_query_heads() / num_kv_heads();
  AttnInstance<T> inst;
  inst.query = queries[static_cast<std::size_t>(query_head)];
  inst.keys = kv_keys[static_cast<std::size_t>(query_head / group)];
  inst.values = kv_values[static_cast<std::size_t>(query_head / group)];
  inst.scale = scale;
  return inst;
}

template <typename T>
std::vector<std::vector<T>> multi_head_attention(const MultiHeadInstance<T>& inst) {
  require(inst.num_kv_heads() > 0, "need at least one KV head");
  require(inst.num_query_heads() % inst.num_kv_heads() == 0,
          "query heads must be a multiple of KV heads");
  std::vector<std::vector<T>> out;
  out.reserve(static_cast<std::size_t>(inst.num_query_heads()));
  for (std::int64_t h = 0; h < inst.num_query_heads(); ++h)
    out.push_back(exact_attention(inst.head_instance(h)));
  return out;
}

std::vector<HeadRange> head_partition(std::int64_t num_kv_heads, std::int64_t num_devices) {
  require(num_kv_heads >= 1, "num_kv_heads must be >= 1");
  require(num_devices >= 1, "num_devices must be >= 1");
  if (num_kv_heads % num_devices != 0)
    throw ValidationError("head partition requires num_kv_heads divisible by num_devices (" +
                          std::to_string(num_kv_heads) + " % " + std::to_string(num_devices) +
                          " != 0)");
  const std::int64_t per_device = num_kv_heads / num_devices;
  std::vector<HeadRange> ranges;
  ranges.reserve(static_cast<std::size_t>(num_devices));
  for (std::int64_t d = 0; d < num_devices; ++d)
    ranges.push_back({d * per_device, (d + 1) * per_device});
  return ranges;
}

RequestAssignment request_partition(std::span<const double> kv_sizes, std::int64_t num_devices) {
  require(num_devices >= 1, "num_devices must be >= 1");
  RequestAssignment out;
  out.device_of.assign(kv_sizes.size(), 0);
  out.device_load.assign(static_cast<std::size_t>(num_devices), 0.0);

  // Longest-first onto the least-loaded device; ties to the lower index.
  std::vector<std::size_t> order(kv_sizes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return kv_sizes[a] > kv_sizes[b]; });
  for (std::size_t r : order) {
    std::size_t target = 0;
    for (std::size_t d = 1; d < out.device_load.size(); ++d)
      if (out.device_load[d] < out.device_load[target]) target = d;
    out.device_of[r] = static_cast<std::int64_t>(target);
    out.device_load[target] += kv_sizes[r];
  }

  const double total = std::accumulate(out.device_load.begin(), out.device_load.end(), 0.0);
  const double mean = total / static_cast<double>(num_devices);
  const double peak = *std::max_element(out.device_load.begin(), out.device_load.end());
  out.imbalance = mean > 0 ? peak / mean : 1.0;
  return out;
}

// Shipped instantiations: double everywhere, float for tolerance studies.
template struct AttnInstance<float>;
template struct AttnInstance<double>;
template struct PartialAttention<float>;
template struct PartialAttention<double>;
template struct MultiHeadInstance<float>;
template struct MultiHeadInstance<double>;

template std::vector<float> exact_attention(const AttnInstance<float>&);
template std::vector<double> exact_attention(const AttnInstance<double>&);
template PartialAttention<float> partial_attention(const AttnInstance<float>&,
                                                   std::span<const std::int64_t>);
template PartialAttention<double> partial_attention(const AttnInstance<double>&,
                                                    std::span<const std::int64_t>);
template PartialAttention<float> merge(const PartialAttention<float>&,
                                       const PartialAttention<float>&);
template PartialAttention<double> merge(const PartialAttention<double>&,
                                        const PartialAttention<double>&);
template std::vector<float> finalize(const PartialAttention<float>&);
template std::vector<double> finalize(const PartialAttention<double>&);
template std::pair<PartialAttention<float>, PartialAttention<float>> split_prev_new(
    const AttnInstance<float>&, std::int64_t);
template std::pair<PartialAttention<double>, PartialAttention<double>> split_prev_new(
    const AttnInstance<double>&, std::int64_t);
template std::vector<std::vector<float>> multi_head_attention(const MultiHeadInstance<float>&);
template std::vector<std::vector<double>> multi_head_attention(const MultiHeadInstance<double>&);

}  // namespace disagg
