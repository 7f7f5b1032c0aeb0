#include "disagg/catalog.hpp"

#include <sstream>

namespace disagg {

namespace {

DeviceSpec make_device(std::string name, double tflops, double mem_gb, double bw_tbs,
                       double nic_gbps, double price, double power_w,
                       std::string price_note = {}) {
  DeviceSpec d;
  d.name = std::move(name);
  d.peak_flops = tflops * 1e12;
  d.mem_bytes = mem_gb * 1e9;
  d.mem_bw = bw_tbs * 1e12;
  d.nic_bw = nic_gbps * 1e9;
  d.price_per_hour = price;
  d.power_w = power_w;
  d.price_note = std::move(price_note);
  return d;
}

LlmSpec make_model(std::string name, double n_params, std::int64_t d, std::int64_t layers,
                   std::int64_t gqa, double weight_gb) {
  LlmSpec s;
  s.name = std::move(name);
  s.n_params = static_cast<std::int64_t>(n_params);
  s.hidden_dim = d;
  s.layers = layers;
  s.gqa_group = gqa;
  s.bytes_per_elem = 2;
  s.weight_bytes = weight_gb * 1e9;
  s.num_heads = d / 128;  // head dim 128; the published configs match
  s.num_heads_assumed = true;
  return s;
}

Catalog build() {
  Catalog c;
  c.devices["H100"] = make_device("H100", 989, 80, 3.35, 400, 11.06, 700);
  c.devices["H20"] = make_device("H20", 148, 96, 4.0, 400, 4.63, 400,
                                 "estimated from relative system cost; not cloud-listed");
  c.devices["TPU-v6e"] = make_device("TPU-v6e", 918, 32, 1.64, 200, 2.70, 0);

  c.models["llama-33b"] = make_model("llama-33b", 32.5e9, 6656, 60, 1, 64.7);
  c.models["llama-65b"] = make_model("llama-65b", 65.2e9, 8192, 80, 1, 130.1);
  c.models["llama3-70b"] = make_model("llama3-70b", 70e9, 8192, 80, 8, 137.5);

  for (auto& [k, v] : c.devices) v.validate();
  for (auto& [k, v] : c.models) v.validate();
  return c;
}

template <typename Map>
std::string known_keys(const Map& m) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, v] : m) {
    if (!first) os << ", ";
    os << k;
    first = false;
  }
  return os.str();
}

}  // namespace

const DeviceSpec& Catalog::device(const std::string& name) const {
  auto it = devices.find(name);
  if (it == devices.end())
    throw LookupError("unknown device '" + name + "' (known: " + known_keys(devices) + ")");
  return it->second;
}

const LlmSpec& Catalog::model(const std::string& name) const {
  auto it = models.find(name);
  if (it == models.end())
    throw LookupError("unknown model '" + name + "' (known: " + known_keys(models) + ")");
  return it->second;
}

const Catalog& builtin_catalog() {
  static const Catalog catalog = build();
  return catalog;
}

}  // namespace disagg
