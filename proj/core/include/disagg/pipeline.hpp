#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "disagg/model.hpp"

namespace disagg {

// Rotational staggered pipelining: n concurrent batches over n-1 model
// replicas and one shared memory-device pool. Per cycle, a batch runs a full
// model pass (t_model) on one replica, then its attention phase (t_attn) on
// the pool; replicas are staggered by t_model/(n-1). The schedule is
// conflict- and bubble-free exactly when t_attn = t_model/(n-1).
//
// All schedule arithmetic is in integer microsecond ticks. Slot boundaries
// come from the exact rational slot length, so rounding error never exceeds
// one tick per slot and never accumulates.

struct PipelineConfig {
  std::int64_t n_batches = 2;  // n >= 2
  double t_model_s = 0;        // one full model pass
  double t_attn_s = 0;         // one attention phase
  std::int64_t n_slices = 1;   // slices per pass; they run contiguously on one replica

  void validate() const;
  // Within 1% of t_attn == t_model/(n-1).
  bool feasible() const;
};

enum class TaskKind { model_slice, attention };

std::string to_string(TaskKind kind);

// Resource 0 is the shared memory pool; 1..n-1 are model replicas.
struct TimelineEntry {
  std::int32_t resource = 0;
  std::int64_t batch = 0;
  TaskKind kind = TaskKind::model_slice;
  std::int64_t pass = 0;  // the batch's pass index (k in the rotation)
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
};

std::string resource_name(std::int32_t resource);

struct Timeline {
  std::vector<TimelineEntry> entries;  // sorted by (start, resource, batch)
  std::int64_t n_batches = 0;
  std::int64_t horizon_us = 0;
  std::int64_t steady_from_us = 0;  // after the first n slots
  bool stretched = false;           // slot lengthened to max(t_attn, t_model/(n-1))
  // Exact rational slot length in ticks: slot = slot_num / slot_den.
  std::int64_t slot_num = 0;
  std::int64_t slot_den = 1;

  double slot_us() const { return static_cast<double>(slot_num) / static_cast<double>(slot_den); }
};

// Replica carrying the k-th model pass of batch j: (j + k) mod (n-1) + 1.
// n = 2 pins everything to replica 1 and needs no context migration.
std::int64_t replica_for(std::int64_t batch_j, std::int64_t pass_k, std::int64_t n_batches);

// Steady-state timeline over `horizon_slots` slots. Infeasible configs are
// rejected unless allow_stretch, in which case the slot grows to
// max(t_attn, t_model/(n-1)) and the short side idles (reported by
// validate()).
Timeline build_schedule(const PipelineConfig& cfg, std::int64_t horizon_slots,
                        bool allow_stretch = true);

struct Bubble {
  std::int32_t resource = 0;
  std::int64_t start_us = 0;
  std::int64_t gap_us = 0;
};

struct ValidationReport {
  std::int64_t conflicts = 0;   // overlapping entries on one resource
  std::vector<Bubble> bubbles;  // idle gaps between entries inside the steady window
  std::int64_t migrations = 0;  // consecutive passes of one batch on different replicas
  std::map<std::string, double> idle_fraction;  // per resource, steady window
};

ValidationReport validate(const Timeline& tl);

// CSV: resource,batch,kind,start_us,end_us
std::string timeline_csv(const Timeline& tl);
ojson report_to_json(const Timeline& tl, const ValidationReport& report);

}  // namespace disagg
