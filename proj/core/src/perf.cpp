#include "disagg/perf.hpp"

#include <cmath>

namespace disagg {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

void EfficiencyProfile::validate() const {
  require(gemm_eff > 0 && gemm_eff <= 1, "gemm_eff must be in (0,1]");
  require(attn_mbu > 0 && attn_mbu <= 1, "attn_mbu must be in (0,1]");
}

PoolCapacity aggregate(const DeviceSpec& device, std::int64_t count) {
  require(count >= 1, "device count must be >= 1");
  PoolCapacity p;
  p.peak_flops = device.peak_flops * static_cast<double>(count);
  p.mem_bw = device.mem_bw * static_cast<double>(count);
  p.mem_bytes = device.mem_bytes * static_cast<double>(count);
  return p;
}

PoolCapacity aggregate(const std::vector<DevicePool>& pools) {
  require(!pools.empty(), "pool must contain at least one device group");
  PoolCapacity p;
  for (const auto& g : pools) {
    PoolCapacity one = aggregate(g.device, g.count);
    p.peak_flops += one.peak_flops;
    p.mem_bw += one.mem_bw;
    p.mem_bytes += one.mem_bytes;
  }
  return p;
}

// =========================================================================
// Non-attention operators (one decode step, batch B)
//
//   FLOPs:  every parameter participates in one multiply-add per request
//           -> 2 N B
//   Bytes:  parameters loaded once (e N), activations in/out per request
//           (2 e B d); batching amortizes the parameter loads, which is
//           why intensity ~ B for B << N / 2d.
// =========================================================================
OpCost nonattn_cost(const LlmSpec& spec, std::int64_t batch) {
  require(batch >= 1, "batch must be >= 1");
  const double n = static_cast<double>(spec.n_params);
  const double b = static_cast<double>(batch);
  const double d = static_cast<double>(spec.hidden_dim);
  const double e = static_cast<double>(spec.bytes_per_elem);
  return {2.0 * n * b, e * (n + 2.0 * b * d)};
}

double nonattn_intensity(const LlmSpec& spec, std::int64_t batch) {
  OpCost c = nonattn_cost(spec, batch);
  return c.flops / c.bytes;
}

// =========================================================================
// Attention operator (one decode step, batch B, context l per request)
//
//   FLOPs:  q . k_j over d (per query head, summed over heads = d work per
//           token) and the weighted-V accumulation, per layer:
//           2 l d + 2 l d = 4 l d, times L layers and B requests.
//   Bytes:  keys and values for l tokens, d/G wide with GQA, e bytes,
//           times 2 (K and V), L layers, B requests. Computed via
//           kv_bytes_per_token so the two agree exactly.
//
//   Intensity = 4 l d L B / (2 e l (d/G) L B) = 2G/e, constant in B and l:
//   batching does not help this operator, it stays bandwidth-bound.
// =========================================================================
OpCost attn_cost(const LlmSpec& spec, std::int64_t batch, std::int64_t seq_len) {
  require(batch >= 1, "batch must be >= 1");
  require(seq_len >= 1, "seq_len must be >= 1");
  const double b = static_cast<double>(batch);
  const double l = static_cast<double>(seq_len);
  const double d = static_cast<double>(spec.hidden_dim);
  const double layers = static_cast<double>(spec.layers);
  OpCost c;
  c.flops = 4.0 * l * d * layers * b;
  c.bytes = kv_bytes_per_token(spec) * l * b;
  return c;
}

RooflineResult roofline_time(const OpCost& cost, const PoolCapacity& pool,
                             const EfficiencyProfile& eff, OpKind kind) {
  eff.validate();
  require(cost.flops >= 0 && cost.bytes >= 0, "op cost must be non-negative");
  const double derate = kind == OpKind::gemm ? eff.gemm_eff : eff.attn_mbu;
  const double t_compute = cost.flops / (pool.peak_flops * derate);
  const double t_memory = cost.bytes / (pool.mem_bw * derate);
  RooflineResult r;
  if (t_compute >= t_memory) {
    r.seconds = t_compute;
    r.bound = Bound::compute;
  } else {
    r.seconds = t_memory;
    r.bound = Bound::bandwidth;
  }
  return r;
}

RooflineResult roofline_time(const OpCost& cost, const DeviceSpec& device, std::int64_t count,
                             const EfficiencyProfile& eff, OpKind kind) {
  return roofline_time(cost, aggregate(device, count), eff, kind);
}

double mfu(double flops, double seconds, const PoolCapacity& pool) {
  require(seconds > 0, "mfu requires time > 0");
  return flops / (seconds * pool.peak_flops);
}

double mbu(double bytes, double seconds, const PoolCapacity& pool) {
  require(seconds > 0, "mbu requires time > 0");
  return bytes / (seconds * pool.mem_bw);
}

double kv_bytes_per_token(const LlmSpec& spec) {
  // d/G is integral: d divides by num_heads, num_heads by G.
  const std::int64_t kv_dim = spec.hidden_dim / spec.gqa_group;
  return 2.0 * static_cast<double>(spec.bytes_per_elem) * static_cast<double>(kv_dim) *
         static_cast<double>(spec.layers);
}

std::int64_t max_batch(double pool_mem_bytes, double reserved_weight_bytes, const LlmSpec& spec,
                       std::int64_t seq_len, double headroom_frac) {
  require(seq_len >= 1, "seq_len must be >= 1");
  require(headroom_frac >= 0 && headroom_frac < 1, "headroom_frac must be in [0,1)");
  const double headroom = headroom_frac * pool_mem_bytes;
  const double free_bytes = pool_mem_bytes - reserved_weight_bytes - headroom;
  if (free_bytes <= 0)
    throw Error("model weights plus headroom exceed pool memory");
  const double per_request = kv_bytes_per_token(spec) * static_cast<double>(seq_len);
  return static_cast<std::int64_t>(std::floor(free_bytes / per_request));
}

double comm_volume(const LlmSpec& spec, std::int64_t batch) {
  require(batch >= 1, "batch must be >= 1");
  const double g = static_cast<double>(spec.gqa_group);
  return (2.0 + 2.0 / g) * static_cast<double>(spec.bytes_per_elem) *
         static_cast<double>(spec.hidden_dim) * static_cast<double>(batch) *
         static_cast<double>(spec.layers);
}

double min_bandwidth(const LlmSpec& spec, std::int64_t batch, double alpha,
                     const TimingEstimate& timing) {
  require(alpha > 0, "alpha must be > 0");
  require(timing.t_model > 0 && timing.t_attn > 0, "iteration times must be > 0");
  return comm_volume(spec, batch) / (alpha * (timing.t_model + timing.t_attn));
}

TimingEstimate estimate_iteration(const LlmSpec& spec, const PoolCapacity& compute_pool,
                                  const PoolCapacity& memory_pool, const EfficiencyProfile& eff,
                                  std::int64_t batch, std::int64_t seq_len) {
  TimingEstimate t;
  RooflineResult model = roofline_time(nonattn_cost(spec, batch), compute_pool, eff, OpKind::gemm);
  RooflineResult attn =
      roofline_time(attn_cost(spec, batch, seq_len), memory_pool, eff, OpKind::attention);
  t.t_model = model.seconds;
  t.model_bound = model.bound;
  t.t_attn = attn.seconds;
  t.attn_bound = attn.bound;
  t.t_net = 0;
  return t;
}

}  // namespace disagg
