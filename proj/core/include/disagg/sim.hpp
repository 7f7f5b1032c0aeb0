#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "disagg/model.hpp"
#include "disagg/net.hpp"
#include "disagg/perf.hpp"

namespace disagg {

// Deterministic discrete-event simulation of trace-driven decoding.
//
// Shape of a disaggregated decode iteration, per layer: a model slice on the
// compute pool, the Q/KV transfer to the memory pool, attention there, and
// the output transfer back. Prefill is modeled as instantaneous KV injection
// at admission; arrival-to-admission queueing is simulated. Continuous
// batching admits FIFO at iteration boundaries.
//
// Events are processed in (time, insertion seq) order with all times in
// integer microsecond ticks, so a (trace, config, options) triple maps to
// exactly one metrics result.

// Tracks KV reservations against pool capacity. A request commits its full
// eventual footprint (prompt + output tokens) at admission, so per-token
// growth can never overrun capacity mid-decode (there is no preemption or
// swapping to recover with); `used` then grows token by token within that
// commitment.
class KvLedger {
 public:
  KvLedger() = default;
  explicit KvLedger(double capacity_bytes) : capacity_(capacity_bytes) {}

  double capacity() const { return capacity_; }
  double used() const { return used_; }
  double committed() const { return committed_; }
  double peak_used() const { return peak_used_; }

  // False when the full reservation does not fit next to existing ones.
  bool try_admit(double full_bytes, double initial_bytes);
  void grow(double bytes);
  void release(double full_bytes, double used_bytes);
  void assert_ok() const;  // throws Error on any accounting violation

 private:
  double capacity_ = 0;
  double used_ = 0;
  double committed_ = 0;
  double peak_used_ = 0;
};

struct SimOptions {
  bool overlap = false;       // hide Q send + prev-token attention behind the slice
  std::int64_t n_batches = 1; // >= 2 enables staggered pipelining (disaggregated only)
  std::uint64_t seed = 0;     // echoed into outputs; the engine itself is deterministic
  double headroom_frac = 0.05;
  EfficiencyProfile eff{};
};

struct LatencyStats {
  double mean_s = 0;
  double p50_s = 0;
  double p99_s = 0;
};

struct SimMetrics {
  std::int64_t tokens_generated = 0;
  double wall_time_s = 0;
  double throughput = 0;  // tokens/s, = tokens_generated / wall_time
  LatencyStats tbt;
  double avg_batch = 0;  // time-weighted over the run
  std::int64_t max_batch_observed = 0;
  std::map<std::string, double> util;  // busy fraction per pool
  double cost_per_hour = 0;
  double tokens_per_dollar = 0;  // throughput * 3600 / cost_per_hour
  std::int64_t requests_completed = 0;
  std::int64_t requests_unfinished = 0;  // admitted or queued at horizon
  double kv_capacity_bytes = 0;
  double kv_peak_bytes = 0;
  std::uint64_t seed = 0;
};

// Disaggregated run: model slices on the compute pool, attention on the
// memory pool, transfers on the named preset link. With overlap enabled, Q
// is sent at the Q-proj point mid-slice and attention over the previous
// tokens starts on Q arrival, hiding transfer and attention time behind the
// remaining slice compute; the exposed time never drops below any single
// component.
SimMetrics run_disaggregated(const LlmSpec& model, const ClusterConfig& cluster,
                             std::span<const TraceRecord> trace, const SimOptions& options);

// Homogeneous tensor-parallel baseline: both operator classes run
// sequentially on one pool, KV capacity is pool memory minus weights, and
// there is no inter-pool network.
SimMetrics run_homogeneous(const LlmSpec& model, const ClusterConfig& cluster,
                           std::span<const TraceRecord> trace, const SimOptions& options);

ojson metrics_to_json(const SimMetrics& m);

}  // namespace disagg
