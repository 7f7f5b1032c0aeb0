#pragma once

#include <string>

#include "disagg/model.hpp"

namespace disagg {

// Inter-pool link model: one-way latency plus a flat achievable bandwidth.
// Presets come from ping-pong measurements between GPUs on different nodes
// over 400Gbps RoCE; "ZERO" is the ideal link used by consistency tests.
struct NetPreset {
  std::string name;
  double base_latency_s = 0;  // one-way, per message, all stack overheads
  double achievable_bw = 0;   // bytes/s; may be +inf

  void validate() const;
};

// Known presets: FHBN (16.5 us, 45.7 GB/s), NCCL-GDR (33.3 us, 35.5 GB/s),
// ZERO (0 s, +inf). Throws LookupError otherwise.
const NetPreset& net_preset(const std::string& name);

// base_latency + bytes / achievable_bw.
double xfer_time(double bytes, const NetPreset& preset);

}  // namespace disagg
