#include <cstdio>
#include <iostream>

#include "commands.hpp"
#include "common.hpp"
#include "disagg/planner.hpp"
#include "disagg/trace.hpp"

namespace disagg::cli {

int cmd_optimize(const OptimizeArgs& args) {
  const LlmSpec model = resolve_model(args.model);
  std::string devices = args.devices == "catalog" ? "H100,H20" : args.devices;
  const auto comma = devices.find(',');
  if (comma == std::string::npos)
    throw ValidationError("--devices expects 'COMPUTE,MEMORY' names");
  const DeviceSpec compute = resolve_device(devices.substr(0, comma));
  const DeviceSpec memory = resolve_device(devices.substr(comma + 1));
  const std::vector<TraceRecord> trace = load_trace_file(args.trace);

  PlanLimits limits{args.a_max, args.b_max};
  PlanOptions options;
  options.network = args.network;
  options.sim.overlap = args.overlap;
  options.sim.n_batches = args.n_batches;
  options.sim.seed = args.seed;
  options.sim.headroom_frac = args.headroom;

  const std::vector<PlanResult> results = plan(model, compute, memory, trace, limits, options);
  write_text(args.out, plan_to_csv(results));

  char line[256];
  for (const auto& r : results) {
    const char* kind = r.b == 0 ? "TP" : "DOP";
    std::snprintf(line, sizeof(line),
                  "#%-2d %s(%lld,%lld)  $%.2f/hr  %.1f tok/s  %.0f tok/$%s\n", r.rank, kind,
                  static_cast<long long>(r.a), static_cast<long long>(r.b), r.cost_per_hour,
                  r.metrics.throughput, r.tokens_per_dollar,
                  r.compute_saturated ? "  [compute-saturated]" : "");
    std::cout << line;
  }
  return 0;
}

}  // namespace disagg::cli
