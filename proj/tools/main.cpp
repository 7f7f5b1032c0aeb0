#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "disagg/model.hpp"

namespace cli = disagg::cli;

int main(int argc, char** argv) {
  CLI::App app{"Capacity planner and deterministic simulator for heterogeneous LLM decoding"};
  app.set_version_flag("--version", "0.1.0");
  app.require_subcommand(1);

  cli::RooflineArgs roofline;
  auto* c_roofline = app.add_subcommand("roofline", "Analytic operator timings and utilization");
  c_roofline->add_option("--model", roofline.model, "Model name or spec JSON")->required();
  c_roofline->add_option("--device", roofline.device, "Device name or spec JSON");
  c_roofline->add_option("--count", roofline.count, "Devices in the pool");
  c_roofline->add_option("--batch", roofline.batch, "Batch size B");
  c_roofline->add_option("--seq", roofline.seq_len, "Context length l");
  c_roofline->add_option("--gemm-eff", roofline.gemm_eff, "Achievable GEMM fraction (0,1]");
  c_roofline->add_option("--attn-mbu", roofline.attn_mbu, "Achievable attention MBU (0,1]");
  c_roofline->add_option("--sweep-batch", roofline.sweep_batch,
                         "Batch sizes; emits tidy CSV (x,series,value) instead of JSON");
  c_roofline->add_option("--out", roofline.out, "Output path (default stdout)");

  cli::MinBandwidthArgs minbw;
  auto* c_minbw = app.add_subcommand("min-bandwidth", "Interconnect bandwidth needed for offload");
  c_minbw->add_option("--model", minbw.model)->required();
  c_minbw->add_option("--batch", minbw.batch)->required();
  c_minbw->add_option("--seq", minbw.seq_len, "Context length l");
  c_minbw->add_option("--alpha", minbw.alpha, "Tolerated network latency fraction");
  c_minbw->add_option("--dop", minbw.dop, "Degree of parallelism a,b");
  c_minbw->add_option("--compute-device", minbw.compute_device);
  c_minbw->add_option("--memory-device", minbw.memory_device);
  c_minbw->add_option("--tm-ms", minbw.tm_ms, "Measured model time per iteration (ms)");
  c_minbw->add_option("--ta-ms", minbw.ta_ms, "Measured attention time per iteration (ms)");
  c_minbw->add_option("--gemm-eff", minbw.gemm_eff);
  c_minbw->add_option("--attn-mbu", minbw.attn_mbu);
  c_minbw->add_option("--sweep-batch", minbw.sweep_batch,
                      "Batch sizes; emits tidy CSV of min bandwidth per batch");
  c_minbw->add_option("--out", minbw.out);

  cli::KvCapacityArgs kvcap;
  auto* c_kvcap = app.add_subcommand("kv-capacity", "KV-cache capacity of a device pool");
  c_kvcap->add_option("--model", kvcap.model)->required();
  c_kvcap->add_option("--device", kvcap.device);
  c_kvcap->add_option("--count", kvcap.count);
  c_kvcap->add_option("--seq", kvcap.seq_len)->required();
  c_kvcap->add_option("--weights-bytes", kvcap.weights_bytes, "Weight bytes resident in the pool");
  c_kvcap->add_option("--headroom", kvcap.headroom, "Reserved fraction of pool memory");
  c_kvcap->add_option("--out", kvcap.out);

  cli::AttentionCheckArgs attn;
  auto* c_attn = app.add_subcommand("attention-check",
                                    "Randomized split/merge attention correctness check");
  c_attn->add_option("--dhead", attn.d_head, "Per-head dimension");
  c_attn->add_option("--heads", attn.heads, "Query heads");
  c_attn->add_option("--length", attn.length, "Token count");
  c_attn->add_option("--splits", attn.splits, "Partition count");
  c_attn->add_option("--trials", attn.trials, "Random instances");
  c_attn->add_option("--seed", attn.seed);
  c_attn->add_option("--out", attn.out);

  cli::SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Slice an operator graph at its attention ops");
  c_split->add_option("--graph", split.graph, "Graph IR JSON")->required();
  c_split->add_option("--batch", split.batch, "Scale per-token edge weights by B");
  c_split->add_option("--out", split.out);

  cli::PipelineArgs pipeline;
  auto* c_pipeline = app.add_subcommand("pipeline", "Rotational staggered pipelining schedule");
  c_pipeline->add_option("--n", pipeline.n_batches, "Concurrent batches (n >= 2)")->required();
  c_pipeline->add_option("--tm-ms", pipeline.tm_ms, "Model pass time (ms)")->required();
  c_pipeline->add_option("--ta-ms", pipeline.ta_ms, "Attention time (ms)")->required();
  c_pipeline->add_option("--slots", pipeline.slots, "Schedule horizon in slots");
  c_pipeline->add_option("--slices", pipeline.slices, "Slices per model pass");
  c_pipeline->add_flag("--no-stretch", pipeline.no_stretch,
                       "Reject infeasible configs instead of stretching the slot");
  c_pipeline->add_option("--out", pipeline.out, "Timeline CSV path");
  c_pipeline->add_option("--report", pipeline.report, "Validation report JSON path");

  cli::SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Trace-driven decoding simulation");
  c_sim->add_option("--model", sim.model)->required();
  c_sim->add_option("--cluster", sim.cluster, "ClusterConfig JSON")->required();
  c_sim->add_option("--trace", sim.trace, "Trace CSV")->required();
  c_sim->add_flag("--overlap", sim.overlap, "Enable resource-utilization overlapping");
  c_sim->add_option("--n-batches", sim.n_batches, "Staggered pipelining sub-batches");
  c_sim->add_option("--seed", sim.seed);
  c_sim->add_option("--headroom", sim.headroom, "Reserved fraction of KV pool memory");
  c_sim->add_option("--gemm-eff", sim.gemm_eff);
  c_sim->add_option("--attn-mbu", sim.attn_mbu);
  c_sim->add_option("--out", sim.out, "Metrics JSON path");

  cli::GenTraceArgs gen;
  auto* c_gen = app.add_subcommand("gen-trace", "Synthetic request trace (lognormal/Poisson)");
  c_gen->add_option("--profile", gen.profile,
                    "Preset: azure-conv, azure-code, kimi-conv, kimi-ta");
  c_gen->add_option("--n", gen.n_requests, "Request count");
  c_gen->add_option("--mean-prompt", gen.mean_prompt, "Mean prompt tokens");
  c_gen->add_option("--mean-output", gen.mean_output, "Mean output tokens");
  c_gen->add_option("--rate", gen.rate, "Poisson arrival rate (req/s)");
  c_gen->add_option("--sigma", gen.sigma, "Lognormal shape");
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--out", gen.out, "Trace CSV path");

  cli::OptimizeArgs opt;
  auto* c_opt = app.add_subcommand("optimize", "Search DOP grid for throughput per dollar");
  c_opt->add_option("--model", opt.model)->required();
  c_opt->add_option("--devices", opt.devices, "compute,memory device names (or 'catalog')");
  c_opt->add_option("--trace", opt.trace)->required();
  c_opt->add_option("--a-max", opt.a_max);
  c_opt->add_option("--b-max", opt.b_max);
  c_opt->add_option("--network", opt.network);
  c_opt->add_flag("--overlap", opt.overlap);
  c_opt->add_option("--n-batches", opt.n_batches);
  c_opt->add_option("--seed", opt.seed);
  c_opt->add_option("--headroom", opt.headroom);
  c_opt->add_option("--out", opt.out, "Plan CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit 0, usage errors exit 2
  }

  try {
    if (c_roofline->parsed()) return cli::cmd_roofline(roofline);
    if (c_minbw->parsed()) return cli::cmd_min_bandwidth(minbw);
    if (c_kvcap->parsed()) return cli::cmd_kv_capacity(kvcap);
    if (c_attn->parsed()) return cli::cmd_attention_check(attn);
    if (c_split->parsed()) return cli::cmd_split(split);
    if (c_pipeline->parsed()) return cli::cmd_pipeline(pipeline);
    if (c_sim->parsed()) return cli::cmd_simulate(sim);
    if (c_gen->parsed()) return cli::cmd_gen_trace(gen);
    if (c_opt->parsed()) return cli::cmd_optimize(opt);
  } catch (const disagg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
