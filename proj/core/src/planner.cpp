#include "disagg/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

namespace disagg {

std::vector<ClusterConfig> enumerate_dops(const PlanLimits& limits, const LlmSpec& model,
                                          const DeviceSpec& compute_device,
                                          const DeviceSpec& memory_device,
                                          const std::string& network) {
  if (limits.a_max < 1 || limits.b_max < 1)
    throw ValidationError("plan limits must be >= 1");
  model.validate();
  compute_device.validate();
  memory_device.validate();

  std::vector<ClusterConfig> configs;
  for (std::int64_t a = 1; a <= limits.a_max; ++a) {
    if (model.weight_bytes > compute_device.mem_bytes * static_cast<double>(a)) continue;
    for (std::int64_t b = 1; b <= limits.b_max; ++b) {
      ClusterConfig c;
      c.mode = ClusterMode::disaggregated;
      c.compute_devices = {{compute_device, a}};
      c.memory_devices = {{memory_device, b}};
      c.network = network;
      configs.push_back(std::move(c));
    }
  }
  for (std::int64_t a = 1; a <= limits.a_max; ++a) {
    if (model.weight_bytes > compute_device.mem_bytes * static_cast<double>(a)) continue;
    ClusterConfig c;
    c.mode = ClusterMode::homogeneous_tp;
    c.compute_devices = {{compute_device, a}};
    c.network = "ZERO";  // no inter-pool traffic in TP baselines
    configs.push_back(std::move(c));
  }
  return configs;
}

std::vector<PlanResult> plan(const LlmSpec& model, const DeviceSpec& compute_device,
                             const DeviceSpec& memory_device, std::span<const TraceRecord> trace,
                             const PlanLimits& limits, const PlanOptions& options) {
  const std::vector<ClusterConfig> configs =
      enumerate_dops(limits, model, compute_device, memory_device, options.network);
  if (configs.empty()) throw Error("no feasible configuration in the given limits");

  std::vector<PlanResult> results;
  for (const auto& config : configs) {
    if (!options.include_homogeneous && config.mode == ClusterMode::homogeneous_tp) continue;
    PlanResult r;
    r.config = config;
    r.a = config.compute_count();
    r.b = config.memory_count();
    SimOptions sim = options.sim;
    if (config.mode == ClusterMode::homogeneous_tp) {
      sim.n_batches = 1;
      sim.overlap = false;
      r.metrics = run_homogeneous(model, config, trace, sim);
    } else {
      r.metrics = run_disaggregated(model, config, trace, sim);
    }
    r.cost_per_hour = config.cost_per_hour();
    r.tokens_per_dollar = r.metrics.tokens_per_dollar;
    auto it = r.metrics.util.find("compute_pool");
    r.compute_saturated = it != r.metrics.util.end() && it->second >= 0.95;
    results.push_back(std::move(r));
  }

  std::stable_sort(results.begin(), results.end(), [](const PlanResult& x, const PlanResult& y) {
    if (x.tokens_per_dollar != y.tokens_per_dollar)
      return x.tokens_per_dollar > y.tokens_per_dollar;
    if (x.cost_per_hour != y.cost_per_hour) return x.cost_per_hour < y.cost_per_hour;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  for (std::size_t i = 0; i < results.size(); ++i)
    results[i].rank = static_cast<std::int32_t>(i) + 1;
  return results;
}

bool equal_cost(const PlanResult& x, const PlanResult& y, double tolerance) {
  const double hi = std::max(x.cost_per_hour, y.cost_per_hour);
  const double lo = std::min(x.cost_per_hour, y.cost_per_hour);
  return hi - lo <= tolerance * hi;
}

std::string plan_to_csv(const std::vector<PlanResult>& results) {
  std::ostringstream os;
  os << "a,b,cost_per_hr,throughput_tps,avg_batch,tbt_p50_ms,tokens_per_dollar,rank\n";
  char buf[256];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%.4f,%.4f,%.4f,%.4f,%.4f,%d\n",
                  static_cast<long long>(r.a), static_cast<long long>(r.b), r.cost_per_hour,
                  r.metrics.throughput, r.metrics.avg_batch, r.metrics.tbt.p50_s * 1e3,
                  r.tokens_per_dollar, r.rank);
    os << buf;
  }
  return os.str();
}

}  // namespace disagg
