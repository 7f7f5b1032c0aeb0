#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace disagg::cli {

struct RooflineArgs {
  std::string model;
  std::string device = "H100";
  std::int64_t count = 1;
  std::int64_t batch = 1;
  std::int64_t seq_len = 4096;
  double gemm_eff = 0.55;
  double attn_mbu = 0.80;
  std::vector<std::int64_t> sweep_batch;  // non-empty -> tidy CSV instead of JSON
  std::string out;
};
int cmd_roofline(const RooflineArgs& args);

struct MinBandwidthArgs {
  std::string model;
  std::int64_t batch = 1;
  std::int64_t seq_len = 8192;
  double alpha = 0.2;
  std::vector<std::string> dops = {"2,4"};  // repeatable; sweeps emit one series each
  std::string compute_device = "H100";
  std::string memory_device = "H20";
  double tm_ms = 0;  // > 0 overrides the roofline estimate
  double ta_ms = 0;
  double gemm_eff = 0.55;
  double attn_mbu = 0.80;
  std::vector<std::int64_t> sweep_batch;
  std::string out;
};
int cmd_min_bandwidth(const MinBandwidthArgs& args);

struct KvCapacityArgs {
  std::string model;
  std::string device = "H100";
  std::int64_t count = 1;
  std::int64_t seq_len = 8192;
  double weights_bytes = 0;
  double headroom = 0;
  std::string out;
};
int cmd_kv_capacity(const KvCapacityArgs& args);

struct AttentionCheckArgs {
  std::int64_t d_head = 16;
  std::int64_t heads = 8;
  std::int64_t length = 128;
  std::int64_t splits = 4;
  std::int64_t trials = 20;
  std::uint64_t seed = 0;
  std::string out;
};
int cmd_attention_check(const AttentionCheckArgs& args);

struct SplitArgs {
  std::string graph;
  std::int64_t batch = 1;
  std::string out;
};
int cmd_split(const SplitArgs& args);

struct PipelineArgs {
  std::int64_t n_batches = 2;
  double tm_ms = 0;
  double ta_ms = 0;
  std::int64_t slots = 1000;
  std::int64_t slices = 1;
  bool no_stretch = false;
  std::string out;     // timeline CSV
  std::string report;  // validation JSON
};
int cmd_pipeline(const PipelineArgs& args);

struct SimulateArgs {
  std::string model;
  std::string cluster;
  std::string trace;
  bool overlap = false;
  std::int64_t n_batches = 1;
  std::uint64_t seed = 0;
  double headroom = 0.05;
  double gemm_eff = 0.55;
  double attn_mbu = 0.80;
  std::string out;
};
int cmd_simulate(const SimulateArgs& args);

struct GenTraceArgs {
  std::string profile;  // optional preset: azure-conv, azure-code, kimi-conv, kimi-ta
  std::int64_t n_requests = 0;
  double mean_prompt = 0;
  double mean_output = 0;
  double rate = 10.0;
  double sigma = 0.6;
  std::uint64_t seed = 0;
  std::string out;
};
int cmd_gen_trace(const GenTraceArgs& args);

struct OptimizeArgs {
  std::string model;
  std::string devices = "H100,H20";  // compute,memory; "catalog" keeps the default
  std::string trace;
  std::int64_t a_max = 2;
  std::int64_t b_max = 4;
  std::string network = "FHBN";
  bool overlap = false;
  std::int64_t n_batches = 1;
  std::uint64_t seed = 0;
  double headroom = 0.05;
  std::string out;
};
int cmd_optimize(const OptimizeArgs& args);

}  // namespace disagg::cli
