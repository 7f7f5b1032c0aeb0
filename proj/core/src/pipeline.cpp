#include "disagg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace disagg {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

std::int64_t to_ticks(double seconds) { return std::llround(seconds * 1e6); }

}  // namespace

void PipelineConfig::validate() const {
  require(n_batches >= 2, "n_batches must be >= 2");
  require(t_model_s > 0 && t_attn_s > 0, "pipeline times must be > 0");
  require(n_slices >= 1, "n_slices must be >= 1");
}

bool PipelineConfig::feasible() const {
  const double nominal = t_model_s / static_cast<double>(n_batches - 1);
  return std::abs(t_attn_s - nominal) <= 0.01 * nominal;
}

std::int64_t replica_for(std::int64_t batch_j, std::int64_t pass_k, std::int64_t n_batches) {
  require(n_batches >= 2, "n_batches must be >= 2");
  return (batch_j + pass_k) % (n_batches - 1) + 1;
}

std::string to_string(TaskKind kind) {
  return kind == TaskKind::model_slice ? "model-slice" : "attention";
}

std::string resource_name(std::int32_t resource) {
  if (resource == 0) return "memory-pool";
  return "replica-" + std::to_string(resource);
}

Timeline build_schedule(const PipelineConfig& cfg, std::int64_t horizon_slots,
                        bool allow_stretch) {
  cfg.validate();
  require(horizon_slots >= 1, "horizon_slots must be >= 1");

  const std::int64_t n = cfg.n_batches;
  const std::int64_t t_model = to_ticks(cfg.t_model_s);
  const std::int64_t t_attn = to_ticks(cfg.t_attn_s);
  require(t_model >= 1 && t_attn >= 1, "pipeline times must round to at least one tick");

  Timeline tl;
  tl.n_batches = n;
  tl.stretched = !cfg.feasible();
  if (tl.stretched && !allow_stretch)
    throw Error("infeasible pipeline config: t_attn != t_model/(n-1) within 1% "
                "and stretching is disabled");

  // Slot as an exact rational. Feasible configs use t_model/(n-1) and the
  // attention entry absorbs the <=1% slack; stretched configs use the longer
  // of the two sides.
  if (!tl.stretched || t_attn * (n - 1) <= t_model) {
    tl.slot_num = t_model;
    tl.slot_den = n - 1;
  } else {
    tl.slot_num = t_attn;
    tl.slot_den = 1;
  }

  // Boundary of global slot s. Monotone, exact, error < 1 tick per slot.
  auto grid = [&](std::int64_t s) { return (s * tl.slot_num) / tl.slot_den; };

  tl.horizon_us = grid(horizon_slots);
  tl.steady_from_us = grid(n);

  for (std::int64_t j = 0; j < n; ++j) {
    for (std::int64_t pass = 0;; ++pass) {
      const std::int64_t s0 = j + pass * n;
      const std::int64_t model_start = grid(s0);
      if (model_start >= tl.horizon_us) break;
      const std::int64_t model_span_end = grid(s0 + (n - 1));
      const std::int64_t slot_end = grid(s0 + n);

      // Model pass: fills its n-1 slots when feasible; keeps its true
      // length (leaving a real gap) when the slot was stretched past it.
      std::int64_t model_end = model_span_end;
      if (tl.stretched && t_model < model_span_end - model_start)
        model_end = model_start + t_model;

      const std::int32_t replica = static_cast<std::int32_t>(replica_for(j, pass, n));
      const std::int64_t span = model_end - model_start;
      for (std::int64_t i = 0; i < cfg.n_slices; ++i) {
        const std::int64_t a = model_start + (i * span) / cfg.n_slices;
        const std::int64_t b = model_start + ((i + 1) * span) / cfg.n_slices;
        if (a >= tl.horizon_us) break;
        tl.entries.push_back(
            {replica, j, TaskKind::model_slice, pass, a, std::min(b, tl.horizon_us)});
      }

      // Attention phase on the shared pool; stretched-short side keeps its
      // true length.
      std::int64_t attn_start = model_span_end;
      std::int64_t attn_end = slot_end;
      if (tl.stretched && t_attn < slot_end - attn_start) attn_end = attn_start + t_attn;
      if (attn_start < tl.horizon_us)
        tl.entries.push_back(
            {0, j, TaskKind::attention, pass, attn_start, std::min(attn_end, tl.horizon_us)});
    }
  }

  std::sort(tl.entries.begin(), tl.entries.end(), [](const TimelineEntry& a, const TimelineEntry& b) {
    return std::tie(a.start_us, a.resource, a.batch, a.end_us) <
           std::tie(b.start_us, b.resource, b.batch, b.end_us);
  });
  return tl;
}

ValidationReport validate(const Timeline& tl) {
  ValidationReport report;

  // Group entries per resource, already start-sorted globally.
  std::map<std::int32_t, std::vector<const TimelineEntry*>> per_resource;
  for (const auto& e : tl.entries) per_resource[e.resource].push_back(&e);

  for (const auto& [resource, entries] : per_resource) {
    std::int64_t busy_in_window = 0;
    for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
      if (entries[i]->end_us > entries[i + 1]->start_us) report.conflicts++;
      const std::int64_t gap_start = entries[i]->end_us;
      const std::int64_t gap_end = entries[i + 1]->start_us;
      // A bubble is an idle gap between scheduled work inside the steady
      // window; warm-up and the clipped horizon tail are not bubbles.
      const std::int64_t clipped_start = std::max(gap_start, tl.steady_from_us);
      if (gap_end > clipped_start)
        report.bubbles.push_back({resource, clipped_start, gap_end - clipped_start});
    }
    std::int64_t window_begin = tl.steady_from_us;
    std::int64_t window_end = entries.empty() ? window_begin : entries.back()->end_us;
    for (const auto* e : entries) {
      const std::int64_t a = std::max(e->start_us, window_begin);
      const std::int64_t b = std::min(e->end_us, window_end);
      if (b > a) busy_in_window += b - a;
    }
    const std::int64_t span = window_end - window_begin;
    report.idle_fraction[resource_name(resource)] =
        span > 0 ? 1.0 - static_cast<double>(busy_in_window) / static_cast<double>(span) : 0.0;
  }

  // Migrations: consecutive model passes of one batch on different replicas.
  std::map<std::int64_t, std::vector<std::pair<std::int64_t, std::int32_t>>> passes;
  for (const auto& e : tl.entries)
    if (e.kind == TaskKind::model_slice) passes[e.batch].push_back({e.pass, e.resource});
  for (auto& [batch, seq] : passes) {
    std::sort(seq.begin(), seq.end());
    seq.erase(std::unique(seq.begin(), seq.end()), seq.end());
    for (std::size_t i = 0; i + 1 < seq.size(); ++i)
      if (seq[i].second != seq[i + 1].second) report.migrations++;
  }
  return report;
}

std::string timeline_csv(const Timeline& tl) {
  std::ostringstream os;
  os << "resource,batch,kind,start_us,end_us\n";
  for (const auto& e : tl.entries)
    os << resource_name(e.resource) << ',' << e.batch << ',' << to_string(e.kind) << ','
       << e.start_us << ',' << e.end_us << '\n';
  return os.str();
}

ojson report_to_json(const Timeline& tl, const ValidationReport& report) {
  ojson j;
  j["n_batches"] = tl.n_batches;
  j["stretched"] = tl.stretched;
  j["slot_us"] = tl.slot_us();
  j["steady_from_us"] = tl.steady_from_us;
  j["horizon_us"] = tl.horizon_us;
  j["conflicts"] = report.conflicts;
  j["migrations"] = report.migrations;
  ojson bubbles = ojson::array();
  for (const auto& b : report.bubbles)
    bubbles.push_back(ojson{{"resource", resource_name(b.resource)},
                            {"start_us", b.start_us},
                            {"gap_us", b.gap_us}});
  j["bubbles"] = std::move(bubbles);
  ojson idle;
  for (const auto& [name, frac] : report.idle_fraction) idle[name] = frac;
  j["idle_fraction"] = std::move(idle);
  return j;
}

}  // namespace disagg
