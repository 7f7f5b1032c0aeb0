#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "disagg/model.hpp"
#include "disagg/sim.hpp"

namespace disagg {

// Configuration search: enumerate DOPs over a small (a, b) grid plus
// homogeneous baselines, simulate each against one trace, and rank by
// tokens per dollar.

struct PlanLimits {
  std::int64_t a_max = 1;
  std::int64_t b_max = 1;
};

struct PlanOptions {
  SimOptions sim{};
  std::string network = "FHBN";
  bool include_homogeneous = true;
};

// All disaggregated (a, b) with 1 <= a <= a_max, 1 <= b <= b_max where the
// weights fit in a compute devices, plus homogeneous (a, 0) baselines where
// the weights fit. Deterministic order: disaggregated grid (a-major), then
// homogeneous.
std::vector<ClusterConfig> enumerate_dops(const PlanLimits& limits, const LlmSpec& model,
                                          const DeviceSpec& compute_device,
                                          const DeviceSpec& memory_device,
                                          const std::string& network);

struct PlanResult {
  ClusterConfig config;
  std::int64_t a = 0;
  std::int64_t b = 0;  // 0 for homogeneous baselines
  SimMetrics metrics;
  double cost_per_hour = 0;
  double tokens_per_dollar = 0;
  bool compute_saturated = false;  // adding memory devices will not help much
  std::int32_t rank = 0;           // 1-based, by tokens_per_dollar desc, ties by cost
};

std::vector<PlanResult> plan(const LlmSpec& model, const DeviceSpec& compute_device,
                             const DeviceSpec& memory_device, std::span<const TraceRecord> trace,
                             const PlanLimits& limits, const PlanOptions& options);

// Hourly costs within the tolerance (default matches the ~10% spread of
// like-for-like hardware swaps).
bool equal_cost(const PlanResult& x, const PlanResult& y, double tolerance = 0.10);

// CSV: a,b,cost_per_hr,throughput_tps,avg_batch,tbt_p50_ms,tokens_per_dollar,rank
std::string plan_to_csv(const std::vector<PlanResult>& results);

}  // namespace disagg
