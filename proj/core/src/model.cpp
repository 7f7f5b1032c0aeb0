#include "disagg/model.hpp"

#include <cmath>
#include <fstream>

#include "disagg/catalog.hpp"

namespace disagg {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ValidationError(what); }

void require(bool ok, const std::string& what) {
  if (!ok) fail(what);
}

const json& field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) fail(std::string("missing field: ") + key);
  return *it;
}

std::int64_t as_count(const json& v, const char* key) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    double r = std::round(d);
    if (std::abs(d - r) > 1e-6 * std::max(1.0, std::abs(d)) || std::abs(r) > 9.2e18)
      fail(std::string(key) + " must be an integer count");
    return static_cast<std::int64_t>(r);
  }
  fail(std::string(key) + " must be a number");
}

double as_number(const json& v, const char* key) {
  if (!v.is_number()) fail(std::string(key) + " must be a number");
  return v.get<double>();
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    fail(path + ": " + e.what());
  }
  return doc;
}

}  // namespace

void LlmSpec::validate() const {
  require(!name.empty(), "name must be non-empty");
  require(n_params > 0, "n_params must be > 0");
  require(hidden_dim > 0, "hidden_dim must be > 0");
  require(layers > 0, "layers must be > 0");
  require(gqa_group >= 1, "gqa_group must be >= 1");
  require(bytes_per_elem == 1 || bytes_per_elem == 2 || bytes_per_elem == 4,
          "bytes_per_elem must be one of {1,2,4}");
  require(num_heads > 0, "num_heads must be > 0");
  require(hidden_dim % num_heads == 0, "hidden_dim must be divisible by num_heads");
  require(num_heads % gqa_group == 0, "num_heads must be divisible by gqa_group");
  require(weight_bytes > 0, "weight_bytes must be > 0");
  double nominal = static_cast<double>(n_params) * static_cast<double>(bytes_per_elem);
  require(std::abs(weight_bytes - nominal) <= 0.10 * nominal,
          "weight_bytes must be within 10% of n_params * bytes_per_elem");
}

void DeviceSpec::validate() const {
  require(!name.empty(), "name must be non-empty");
  require(peak_flops > 0, "peak_flops must be > 0");
  require(mem_bytes > 0, "mem_bytes must be > 0");
  require(mem_bw > 0, "mem_bw must be > 0");
  require(nic_bw > 0, "nic_bw must be > 0");
  require(price_per_hour > 0, "price_per_hour must be > 0");
  require(power_w >= 0, "power_w must be >= 0");
}

std::string to_string(ClusterMode mode) {
  return mode == ClusterMode::disaggregated ? "disaggregated" : "homogeneous-TP";
}

ClusterMode cluster_mode_from_string(const std::string& s) {
  if (s == "disaggregated") return ClusterMode::disaggregated;
  if (s == "homogeneous-TP") return ClusterMode::homogeneous_tp;
  throw ValidationError("mode must be 'disaggregated' or 'homogeneous-TP', got '" + s + "'");
}

std::int64_t ClusterConfig::compute_count() const {
  std::int64_t n = 0;
  for (const auto& p : compute_devices) n += p.count;
  return n;
}

std::int64_t ClusterConfig::memory_count() const {
  std::int64_t n = 0;
  for (const auto& p : memory_devices) n += p.count;
  return n;
}

double ClusterConfig::cost_per_hour() const {
  double c = 0;
  for (const auto& p : compute_devices) c += p.device.price_per_hour * static_cast<double>(p.count);
  for (const auto& p : memory_devices) c += p.device.price_per_hour * static_cast<double>(p.count);
  return c;
}

void ClusterConfig::validate() const {
  for (const auto& p : compute_devices) {
    p.device.validate();
    require(p.count >= 1, "device count must be >= 1");
  }
  for (const auto& p : memory_devices) {
    p.device.validate();
    require(p.count >= 1, "device count must be >= 1");
  }
  require(!network.empty(), "network preset reference must be non-empty");
  if (mode == ClusterMode::disaggregated) {
    require(compute_count() >= 1, "disaggregated mode requires at least 1 compute device");
    require(memory_count() >= 1, "disaggregated mode requires at least 1 memory device");
  } else {
    require(compute_count() >= 1, "homogeneous mode requires at least 1 device");
    require(memory_count() == 0, "homogeneous mode requires an empty memory pool");
  }
}

void WorkloadPoint::validate() const {
  require(batch >= 1, "batch must be >= 1");
  require(seq_len >= 1, "seq_len must be >= 1");
}

void TraceRecord::validate() const {
  require(!request_id.empty(), "request_id must be non-empty");
  require(arrival_s >= 0, "arrival_s must be >= 0");
  require(prompt_tokens >= 1, "prompt_tokens must be >= 1");
  require(output_tokens >= 1, "output_tokens must be >= 1");
}

bool operator==(const LlmSpec& a, const LlmSpec& b) {
  return a.name == b.name && a.n_params == b.n_params && a.hidden_dim == b.hidden_dim &&
         a.layers == b.layers && a.gqa_group == b.gqa_group &&
         a.bytes_per_elem == b.bytes_per_elem && a.weight_bytes == b.weight_bytes &&
         a.num_heads == b.num_heads && a.num_heads_assumed == b.num_heads_assumed;
}

bool operator==(const DeviceSpec& a, const DeviceSpec& b) {
  return a.name == b.name && a.peak_flops == b.peak_flops && a.mem_bytes == b.mem_bytes &&
         a.mem_bw == b.mem_bw && a.nic_bw == b.nic_bw &&
         a.price_per_hour == b.price_per_hour && a.power_w == b.power_w &&
         a.price_note == b.price_note;
}

LlmSpec load_llm_spec(const json& doc) {
  if (!doc.is_object()) fail("LlmSpec document must be a JSON object");
  LlmSpec s;
  s.name = field(doc, "name").get<std::string>();
  s.n_params = as_count(field(doc, "n_params"), "n_params");
  s.hidden_dim = as_count(field(doc, "hidden_dim"), "hidden_dim");
  s.layers = as_count(field(doc, "layers"), "layers");
  s.gqa_group = as_count(field(doc, "gqa_group"), "gqa_group");
  s.bytes_per_elem = as_count(field(doc, "bytes_per_elem"), "bytes_per_elem");
  s.weight_bytes = as_number(field(doc, "weight_bytes"), "weight_bytes");
  if (doc.contains("num_heads")) {
    s.num_heads = as_count(doc.at("num_heads"), "num_heads");
    s.num_heads_assumed = false;
  } else {
    // Convention: head dim 128. Flagged so reports can mark it as assumed.
    if (s.hidden_dim <= 0 || s.hidden_dim % 128 != 0)
      fail("num_heads absent and hidden_dim not divisible by 128");
    s.num_heads = s.hidden_dim / 128;
    s.num_heads_assumed = true;
  }
  s.validate();
  return s;
}

DeviceSpec load_device_spec(const json& doc) {
  if (!doc.is_object()) fail("DeviceSpec document must be a JSON object");
  DeviceSpec d;
  d.name = field(doc, "name").get<std::string>();
  d.peak_flops = as_number(field(doc, "peak_flops"), "peak_flops");
  d.mem_bytes = as_number(field(doc, "mem_bytes"), "mem_bytes");
  d.mem_bw = as_number(field(doc, "mem_bw"), "mem_bw");
  d.nic_bw = as_number(field(doc, "nic_bw"), "nic_bw");
  d.price_per_hour = as_number(field(doc, "price_per_hour"), "price_per_hour");
  if (doc.contains("power_w")) d.power_w = as_number(doc.at("power_w"), "power_w");
  if (doc.contains("price_note")) d.price_note = doc.at("price_note").get<std::string>();
  d.validate();
  return d;
}

namespace {

std::vector<DevicePool> load_pools(const json& arr, const char* key) {
  if (!arr.is_array()) fail(std::string(key) + " must be an array");
  std::vector<DevicePool> pools;
  for (const auto& entry : arr) {
    DevicePool p;
    const json& dev = field(entry, "device");
    if (dev.is_string())
      p.device = builtin_catalog().device(dev.get<std::string>());
    else
      p.device = load_device_spec(dev);
    p.count = as_count(field(entry, "count"), "count");
    pools.push_back(std::move(p));
  }
  return pools;
}

}  // namespace

ClusterConfig load_cluster_config(const json& doc) {
  if (!doc.is_object()) fail("ClusterConfig document must be a JSON object");
  ClusterConfig c;
  c.mode = cluster_mode_from_string(field(doc, "mode").get<std::string>());
  c.compute_devices = load_pools(field(doc, "compute_devices"), "compute_devices");
  if (doc.contains("memory_devices"))
    c.memory_devices = load_pools(doc.at("memory_devices"), "memory_devices");
  if (doc.contains("network")) c.network = doc.at("network").get<std::string>();
  c.validate();
  return c;
}

ojson to_json(const LlmSpec& s) {
  ojson j;
  j["name"] = s.name;
  j["n_params"] = s.n_params;
  j["hidden_dim"] = s.hidden_dim;
  j["layers"] = s.layers;
  j["gqa_group"] = s.gqa_group;
  j["bytes_per_elem"] = s.bytes_per_elem;
  j["weight_bytes"] = s.weight_bytes;
  j["num_heads"] = s.num_heads;
  j["num_heads_assumed"] = s.num_heads_assumed;
  return j;
}

ojson to_json(const DeviceSpec& d) {
  ojson j;
  j["name"] = d.name;
  j["peak_flops"] = d.peak_flops;
  j["mem_bytes"] = d.mem_bytes;
  j["mem_bw"] = d.mem_bw;
  j["nic_bw"] = d.nic_bw;
  j["price_per_hour"] = d.price_per_hour;
  j["power_w"] = d.power_w;
  if (!d.price_note.empty()) j["price_note"] = d.price_note;
  return j;
}

ojson to_json(const ClusterConfig& c) {
  ojson j;
  j["mode"] = to_string(c.mode);
  ojson comp = ojson::array();
  for (const auto& p : c.compute_devices)
    comp.push_back(ojson{{"device", to_json(p.device)}, {"count", p.count}});
  j["compute_devices"] = std::move(comp);
  ojson mem = ojson::array();
  for (const auto& p : c.memory_devices)
    mem.push_back(ojson{{"device", to_json(p.device)}, {"count", p.count}});
  j["memory_devices"] = std::move(mem);
  j["network"] = c.network;
  return j;
}

LlmSpec load_llm_spec_file(const std::string& path) { return load_llm_spec(parse_file(path)); }

DeviceSpec load_device_spec_file(const std::string& path) {
  return load_device_spec(parse_file(path));
}

ClusterConfig load_cluster_config_file(const std::string& path) {
  return load_cluster_config(parse_file(path));
}

}  // namespace disagg
