#include "disagg/net.hpp"

#include <limits>
#include <map>

namespace disagg {

void NetPreset::validate() const {
  if (base_latency_s < 0) throw ValidationError("base_latency must be >= 0");
  if (!(achievable_bw > 0)) throw ValidationError("achievable_bw must be > 0");
}

const NetPreset& net_preset(const std::string& name) {
  static const std::map<std::string, NetPreset> presets = {
      {"FHBN", {"FHBN", 16.5e-6, 45.7e9}},
      {"NCCL-GDR", {"NCCL-GDR", 33.3e-6, 35.5e9}},
      {"ZERO", {"ZERO", 0.0, std::numeric_limits<double>::infinity()}},
  };
  auto it = presets.find(name);
  if (it == presets.end())
    throw LookupError("unknown network preset '" + name + "' (known: FHBN, NCCL-GDR, ZERO)");
  return it->second;
}

double xfer_time(double bytes, const NetPreset& preset) {
  if (bytes < 0) throw ValidationError("transfer size must be >= 0");
  return preset.base_latency_s + bytes / preset.achievable_bw;
}

}  // namespace disagg
