#pragma once

#include <cstdint>
#include <vector>

#include "disagg/model.hpp"

namespace disagg {

// Analytic decode-phase cost model: per-operator-class flop/byte counts,
// roofline timing, utilization, KV-cache capacity, and the minimum
// interconnect bandwidth needed to offload attention to a remote pool.

struct OpCost {
  double flops = 0;
  double bytes = 0;  // moved to/from device memory
};

enum class Bound { compute, bandwidth };

struct RooflineResult {
  double seconds = 0;
  Bound bound = Bound::compute;
};

enum class OpKind { gemm, attention };

// Achievable fractions of peak. Defaults are calibration knobs, not
// measurements; both are config-overridable.
struct EfficiencyProfile {
  double gemm_eff = 0.55;
  double attn_mbu = 0.80;

  void validate() const;  // each must lie in (0, 1]
};

// Aggregate capability of a device pool (sum over devices).
struct PoolCapacity {
  double peak_flops = 0;
  double mem_bw = 0;
  double mem_bytes = 0;
};

PoolCapacity aggregate(const DeviceSpec& device, std::int64_t count);
PoolCapacity aggregate(const std::vector<DevicePool>& pools);

// One decode iteration, non-attention vs attention split.
struct TimingEstimate {
  double t_model = 0;  // seconds, all non-attention work
  double t_attn = 0;   // seconds, attention on the KV cache
  double t_net = 0;    // seconds, exposed network time (0 for analytic-only)
  Bound model_bound = Bound::compute;
  Bound attn_bound = Bound::bandwidth;
};

// Non-attention operators (QKVO projections, FFN) for one decode step of a
// batch of B requests: 2NB flops; eN parameter bytes plus 2eBd activation
// traffic.
OpCost nonattn_cost(const LlmSpec& spec, std::int64_t batch);

// 2NB / (e(N + 2Bd)); strictly increasing in B.
double nonattn_intensity(const LlmSpec& spec, std::int64_t batch);

// Attention over a KV cache of l tokens per request. Flops cover QK^T plus
// the weighted-V sum; bytes are the KV-cache reads. Per-token Q/K/V/output
// vectors are excluded: they are O(eBd) per layer against O(eBl d/G) for
// the cache, under 1% at l >= 512, and only the cache term keeps the
// intensity constant at 2G/e.
OpCost attn_cost(const LlmSpec& spec, std::int64_t batch, std::int64_t seq_len);

// time = max(flops, bytes) over the derated pool; reports which term bound.
// The efficiency knob for the op kind derates both terms.
RooflineResult roofline_time(const OpCost& cost, const PoolCapacity& pool,
                             const EfficiencyProfile& eff, OpKind kind);
RooflineResult roofline_time(const OpCost& cost, const DeviceSpec& device, std::int64_t count,
                             const EfficiencyProfile& eff, OpKind kind);

// Achieved fraction of aggregate peak flops / bandwidth. Unclamped: values
// above 1 indicate inconsistent inputs and are the caller's problem to flag.
double mfu(double flops, double seconds, const PoolCapacity& pool);
double mbu(double bytes, double seconds, const PoolCapacity& pool);

// 2 e (d/G) L : K and V for one token, all layers.
double kv_bytes_per_token(const LlmSpec& spec);

// Largest batch whose KV fits next to the weights, at context length l.
// headroom_frac of pool memory is set aside for activations/fragmentation.
std::int64_t max_batch(double pool_mem_bytes, double reserved_weight_bytes, const LlmSpec& spec,
                       std::int64_t seq_len, double headroom_frac = 0.05);

// Bytes crossing the pool boundary per decode iteration:
//   send Q (edB) + send KV (2edB/G) + return output (edB), per layer
//   = (2 + 2/G) e d B L.
double comm_volume(const LlmSpec& spec, std::int64_t batch);

// Interconnect bandwidth needed so network overhead stays within a factor
// alpha of the compute time: comm_volume / (alpha (t_model + t_attn)).
double min_bandwidth(const LlmSpec& spec, std::int64_t batch, double alpha,
                     const TimingEstimate& timing);

// Convenience: roofline-timed iteration on a compute pool + memory pool.
TimingEstimate estimate_iteration(const LlmSpec& spec, const PoolCapacity& compute_pool,
                                  const PoolCapacity& memory_pool, const EfficiencyProfile& eff,
                                  std::int64_t batch, std::int64_t seq_len);

}  // namespace disagg
