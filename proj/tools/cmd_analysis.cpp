#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "common.hpp"
#include "disagg/attention.hpp"
#include "disagg/perf.hpp"

namespace disagg::cli {

namespace {

const char* bound_name(Bound b) { return b == Bound::compute ? "compute" : "bandwidth"; }

ojson op_report(const OpCost& cost, const RooflineResult& rt, const PoolCapacity& pool) {
  ojson j;
  j["flops"] = cost.flops;
  j["bytes"] = cost.bytes;
  j["intensity"] = cost.flops / cost.bytes;
  j["time_s"] = rt.seconds;
  j["bound"] = bound_name(rt.bound);
  j["mfu"] = mfu(cost.flops, rt.seconds, pool);
  j["mbu"] = mbu(cost.bytes, rt.seconds, pool);
  return j;
}

std::string tidy_csv(const std::vector<std::tuple<double, std::string, double>>& rows) {
  std::ostringstream os;
  os << "x,series,value\n";
  char buf[128];
  for (const auto& [x, series, value] : rows) {
    std::snprintf(buf, sizeof(buf), "%.6g,%s,%.10g\n", x, series.c_str(), value);
    os << buf;
  }
  return os.str();
}

}  // namespace

int cmd_roofline(const RooflineArgs& args) {
  const LlmSpec model = resolve_model(args.model);
  const DeviceSpec device = resolve_device(args.device);
  const PoolCapacity pool = aggregate(device, args.count);
  const EfficiencyProfile eff{args.gemm_eff, args.attn_mbu};

  if (!args.sweep_batch.empty()) {
    std::vector<std::tuple<double, std::string, double>> rows;
    for (std::int64_t b : args.sweep_batch) {
      const OpCost mc = nonattn_cost(model, b);
      const RooflineResult mt = roofline_time(mc, pool, eff, OpKind::gemm);
      const OpCost ac = attn_cost(model, b, args.seq_len);
      const RooflineResult at = roofline_time(ac, pool, eff, OpKind::attention);
      rows.emplace_back(double(b), "nonattn_mfu", mfu(mc.flops, mt.seconds, pool));
      rows.emplace_back(double(b), "nonattn_time_s", mt.seconds);
      rows.emplace_back(double(b), "attn_mbu", mbu(ac.bytes, at.seconds, pool));
      rows.emplace_back(double(b), "attn_time_s", at.seconds);
    }
    write_text(args.out, tidy_csv(rows));
    return 0;
  }

  const OpCost mc = nonattn_cost(model, args.batch);
  const RooflineResult mt = roofline_time(mc, pool, eff, OpKind::gemm);
  const OpCost ac = attn_cost(model, args.batch, args.seq_len);
  const RooflineResult at = roofline_time(ac, pool, eff, OpKind::attention);

  ojson j;
  j["model"] = model.name;
  j["device"] = device.name;
  j["count"] = args.count;
  j["batch"] = args.batch;
  j["seq_len"] = args.seq_len;
  j["gemm_eff"] = eff.gemm_eff;
  j["attn_mbu"] = eff.attn_mbu;
  if (model.num_heads_assumed) j["num_heads_assumed"] = true;
  j["nonattn"] = op_report(mc, mt, pool);
  j["attention"] = op_report(ac, at, pool);
  j["tbt_estimate_s"] = mt.seconds + at.seconds;
  write_json(args.out, j);
  return 0;
}

int cmd_min_bandwidth(const MinBandwidthArgs& args) {
  const LlmSpec model = resolve_model(args.model);
  const auto [a, b] = parse_pair(args.dop);
  const PoolCapacity compute = aggregate(resolve_device(args.compute_device), a);
  const PoolCapacity memory = aggregate(resolve_device(args.memory_device), b);
  const EfficiencyProfile eff{args.gemm_eff, args.attn_mbu};
  const bool measured = args.tm_ms > 0 && args.ta_ms > 0;

  auto timing_for = [&](std::int64_t batch) {
    TimingEstimate t = estimate_iteration(model, compute, memory, eff, batch, args.seq_len);
    if (measured) {
      t.t_model = args.tm_ms * 1e-3;
      t.t_attn = args.ta_ms * 1e-3;
    }
    return t;
  };

  if (!args.sweep_batch.empty()) {
    std::vector<std::tuple<double, std::string, double>> rows;
    const std::string series = "dop-" + std::to_string(a) + "," + std::to_string(b);
    for (std::int64_t batch : args.sweep_batch) {
      const double bw = min_bandwidth(model, batch, args.alpha, timing_for(batch));
      rows.emplace_back(double(batch), series, bw / 1e9);
    }
    write_text(args.out, tidy_csv(rows));
    return 0;
  }

  const TimingEstimate timing = timing_for(args.batch);
  const double bw = min_bandwidth(model, args.batch, args.alpha, timing);
  ojson j;
  j["model"] = model.name;
  j["batch"] = args.batch;
  j["seq_len"] = args.seq_len;
  j["alpha"] = args.alpha;
  j["dop"] = ojson{{"a", a}, {"b", b}};
  j["bytes_per_iter"] = static_cast<std::int64_t>(std::llround(comm_volume(model, args.batch)));
  j["t_model_s"] = timing.t_model;
  j["t_attn_s"] = timing.t_attn;
  j["timing_source"] = measured ? "measured" : "roofline";
  j["min_bw_bytes_per_s"] = bw;
  j["min_bw_gbps"] = bw / 1e9;
  write_json(args.out, j);
  return 0;
}

int cmd_kv_capacity(const KvCapacityArgs& args) {
  const LlmSpec model = resolve_model(args.model);
  const DeviceSpec device = resolve_device(args.device);
  const PoolCapacity pool = aggregate(device, args.count);
  const std::int64_t requests =
      max_batch(pool.mem_bytes, args.weights_bytes, model, args.seq_len, args.headroom);

  ojson j;
  j["model"] = model.name;
  j["device"] = device.name;
  j["count"] = args.count;
  j["seq_len"] = args.seq_len;
  j["kv_bytes_per_token"] = kv_bytes_per_token(model);
  j["pool_mem_bytes"] = pool.mem_bytes;
  j["weights_bytes"] = args.weights_bytes;
  j["headroom"] = args.headroom;
  j["max_requests"] = requests;
  write_json(args.out, j);
  return 0;
}

int cmd_attention_check(const AttentionCheckArgs& args) {
  if (args.d_head < 1 || args.heads < 1 || args.length < 1 || args.splits < 1 || args.trials < 1)
    throw ValidationError("attention-check arguments must be >= 1");

  std::mt19937_64 rng(args.seed);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1p-53);
  };

  double max_rel_error = 0;
  for (std::int64_t trial = 0; trial < args.trials; ++trial) {
    for (std::int64_t h = 0; h < args.heads; ++h) {
      AttnInstance<double> inst;
      inst.scale = 1.0 / std::sqrt(static_cast<double>(args.d_head));
      inst.query.resize(static_cast<std::size_t>(args.d_head));
      for (auto& x : inst.query) x = uniform(-1, 1);
      inst.keys.resize(static_cast<std::size_t>(args.length));
      inst.values.resize(static_cast<std::size_t>(args.length));
      for (std::int64_t t = 0; t < args.length; ++t) {
        auto& k = inst.keys[static_cast<std::size_t>(t)];
        auto& v = inst.values[static_cast<std::size_t>(t)];
        k.resize(static_cast<std::size_t>(args.d_head));
        v.resize(static_cast<std::size_t>(args.d_head));
        for (auto& x : k) x = uniform(-2, 2);
        for (auto& x : v) x = uniform(-1, 1);
      }

      const std::vector<double> exact = exact_attention(inst);
      std::vector<std::vector<std::int64_t>> parts(static_cast<std::size_t>(args.splits));
      for (std::int64_t t = 0; t < args.length; ++t)
        parts[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(args.splits))]
            .push_back(t);
      auto merged = PartialAttention<double>::identity(args.d_head);
      for (const auto& part : parts) merged = merge(merged, partial_attention<double>(inst, part));
      const std::vector<double> got = finalize(merged);
      for (std::size_t i = 0; i < got.size(); ++i) {
        const double denom = std::max(std::abs(exact[i]), 1e-12);
        max_rel_error = std::max(max_rel_error, std::abs(got[i] - exact[i]) / denom);
      }
    }
  }

  ojson j;
  j["d_head"] = args.d_head;
  j["heads"] = args.heads;
  j["length"] = args.length;
  j["splits"] = args.splits;
  j["trials"] = args.trials;
  j["seed"] = args.seed;
  j["max_rel_error"] = max_rel_error;
  write_json(args.out, j);
  return 0;
}

}  // namespace disagg::cli
