#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

// Shared domain types for the heterogeneous decoding planner.
//
// Unit conventions, used everywhere in this library:
//   bytes, flops, bandwidths  -> double (magnitudes span 1 .. 1e15)
//   counts                    -> int64
//   times                     -> double seconds in analytic code,
//                                int64 microsecond ticks in schedules
//   GB, GB/s                  -> decimal (1e9), matching vendor datasheets

namespace disagg {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;  // stable field order for emitted files

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Schema or invariant violation in an input document or constructed value.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Missing catalog entry, unknown preset, and similar lookups.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Model architecture constants. weight_bytes is carried explicitly because
// published totals (embedding sharing, untied heads) differ slightly from
// n_params * bytes_per_elem; the invariant only requires them to agree
// within 10%.
struct LlmSpec {
  std::string name;
  std::int64_t n_params = 0;       // N
  std::int64_t hidden_dim = 0;     // d
  std::int64_t layers = 0;         // L
  std::int64_t gqa_group = 1;      // G
  std::int64_t bytes_per_elem = 2; // e
  double weight_bytes = 0;
  std::int64_t num_heads = 0;      // query heads
  bool num_heads_assumed = false;  // true when defaulted to hidden_dim/128

  std::int64_t kv_heads() const { return num_heads / gqa_group; }
  std::int64_t head_dim() const { return hidden_dim / num_heads; }

  void validate() const;  // throws ValidationError naming the bad field
};

// One accelerator SKU. power_w is informational; 0 means unlisted.
struct DeviceSpec {
  std::string name;
  double peak_flops = 0;      // dense 16-bit flop/s
  double mem_bytes = 0;
  double mem_bw = 0;          // bytes/s
  double nic_bw = 0;          // bits/s
  double price_per_hour = 0;  // USD
  double power_w = 0;
  std::string price_note;     // provenance remark for estimated prices

  void validate() const;
};

struct DevicePool {
  DeviceSpec device;
  std::int64_t count = 1;
};

enum class ClusterMode { disaggregated, homogeneous_tp };

std::string to_string(ClusterMode mode);
ClusterMode cluster_mode_from_string(const std::string& s);

// A deployment: compute pool of `a` devices for non-attention operators,
// memory pool of `b` devices for attention, i.e. DOP (a, b). Homogeneous
// tensor-parallel baselines use mode homogeneous_tp with b = 0.
struct ClusterConfig {
  std::vector<DevicePool> compute_devices;
  std::vector<DevicePool> memory_devices;
  std::string network = "FHBN";  // NetPreset reference, resolved by the simulator
  ClusterMode mode = ClusterMode::disaggregated;

  std::int64_t compute_count() const;
  std::int64_t memory_count() const;
  double cost_per_hour() const;

  void validate() const;
};

struct WorkloadPoint {
  std::int64_t batch = 1;    // B
  std::int64_t seq_len = 1;  // l

  void validate() const;
};

struct TraceRecord {
  std::string request_id;
  double arrival_s = 0;  // seconds from epoch 0
  std::int64_t prompt_tokens = 1;
  std::int64_t output_tokens = 1;

  void validate() const;
};

bool operator==(const LlmSpec& a, const LlmSpec& b);
bool operator==(const DeviceSpec& a, const DeviceSpec& b);

// JSON loaders validate before returning. Field names match the struct
// members (snake_case) exactly.
LlmSpec load_llm_spec(const json& doc);
DeviceSpec load_device_spec(const json& doc);
// Cluster documents may reference catalog devices by name instead of
// inlining the full spec.
ClusterConfig load_cluster_config(const json& doc);

ojson to_json(const LlmSpec& spec);
ojson to_json(const DeviceSpec& spec);
ojson to_json(const ClusterConfig& cfg);

LlmSpec load_llm_spec_file(const std::string& path);
DeviceSpec load_device_spec_file(const std::string& path);
ClusterConfig load_cluster_config_file(const std::string& path);

}  // namespace disagg
