#include <cstdio>
#include <iostream>

#include "commands.hpp"
#include "common.hpp"
#include "disagg/sim.hpp"
#include "disagg/trace.hpp"

namespace disagg::cli {

int cmd_simulate(const SimulateArgs& args) {
  const LlmSpec model = resolve_model(args.model);
  const ClusterConfig cluster = load_cluster_config_file(args.cluster);
  const std::vector<TraceRecord> trace = load_trace_file(args.trace);

  SimOptions options;
  options.overlap = args.overlap;
  options.n_batches = args.n_batches;
  options.seed = args.seed;
  options.headroom_frac = args.headroom;
  options.eff = {args.gemm_eff, args.attn_mbu};

  const SimMetrics metrics = cluster.mode == ClusterMode::disaggregated
                                 ? run_disaggregated(model, cluster, trace, options)
                                 : run_homogeneous(model, cluster, trace, options);

  write_json(args.out, metrics_to_json(metrics));
  if (!args.out.empty() && args.out != "-") {
    char line[256];
    std::snprintf(line, sizeof(line),
                  "%lld tokens in %.2fs: %.1f tok/s, avg batch %.1f, tbt p50 %.2fms -> %s\n",
                  static_cast<long long>(metrics.tokens_generated), metrics.wall_time_s,
                  metrics.throughput, metrics.avg_batch, metrics.tbt.p50_s * 1e3,
                  args.out.c_str());
    std::cout << line;
  }
  return 0;
}

int cmd_gen_trace(const GenTraceArgs& args) {
  TraceProfile profile;
  profile.n_requests = args.n_requests;
  profile.mean_prompt = args.mean_prompt;
  profile.mean_output = args.mean_output;
  profile.arrival_rate = args.rate;
  profile.sigma = args.sigma;
  profile.seed = args.seed;

  // Published production-trace summaries, selectable as presets.
  if (!args.profile.empty()) {
    struct Preset {
      const char* name;
      std::int64_t n;
      double prompt, output;
    };
    static const Preset presets[] = {
        {"azure-conv", 19366, 1154.7, 211.1},
        {"azure-code", 8819, 2047.8, 27.9},
        {"kimi-conv", 12031, 12035.1, 342.6},
        {"kimi-ta", 23608, 8560.0, 182.1},
    };
    bool found = false;
    for (const auto& p : presets) {
      if (args.profile == p.name) {
        if (profile.n_requests == 0) profile.n_requests = p.n;
        if (profile.mean_prompt == 0) profile.mean_prompt = p.prompt;
        if (profile.mean_output == 0) profile.mean_output = p.output;
        found = true;
        break;
      }
    }
    if (!found)
      throw LookupError("unknown trace profile '" + args.profile +
                        "' (known: azure-conv, azure-code, kimi-conv, kimi-ta)");
  }

  const std::vector<TraceRecord> trace = gen_trace(profile);
  write_text(args.out, trace_to_csv(trace));
  if (!args.out.empty() && args.out != "-")
    std::cout << trace.size() << " requests -> " << args.out << '\n';
  return 0;
}

}  // namespace disagg::cli
