#include "disagg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <tuple>

namespace disagg {

// ---- KvLedger -------------------------------------------------------------

bool KvLedger::try_admit(double full_bytes, double initial_bytes) {
  if (initial_bytes > full_bytes) throw Error("initial KV cannot exceed the full reservation");
  if (committed_ + full_bytes > capacity_) return false;
  committed_ += full_bytes;
  used_ += initial_bytes;
  peak_used_ = std::max(peak_used_, used_);
  assert_ok();
  return true;
}

void KvLedger::grow(double bytes) {
  used_ += bytes;
  peak_used_ = std::max(peak_used_, used_);
  assert_ok();
}

void KvLedger::release(double full_bytes, double used_bytes) {
  committed_ -= full_bytes;
  used_ -= used_bytes;
  assert_ok();
}

void KvLedger::assert_ok() const {
  // All quantities are sums of exact integer-valued doubles; the epsilon
  // only guards against a future change breaking that.
  constexpr double eps = 1e-3;
  if (used_ < -eps || committed_ < -eps || used_ > committed_ + eps ||
      committed_ > capacity_ + eps)
    throw Error("KV ledger accounting violation (used " + std::to_string(used_) +
                ", committed " + std::to_string(committed_) + ", capacity " +
                std::to_string(capacity_) + ")");
}

// ---- event engine ---------------------------------------------------------

namespace {

enum class EventKind : std::uint8_t { arrival, iter_boundary, slice_done, xfer_done, attn_done };

struct Event {
  std::int64_t time_us = 0;
  std::uint64_t seq = 0;  // insertion order; makes equal-time processing deterministic
  EventKind kind = EventKind::arrival;
  std::int32_t stream = 0;
  std::int32_t request = -1;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.time_us, a.seq) > std::tie(b.time_us, b.seq);
  }
};

struct Request {
  std::int64_t arrival_us = 0;
  std::int64_t prompt = 0;
  std::int64_t output = 0;
  std::int64_t generated = 0;
  bool done = false;

  std::int64_t context() const { return prompt + generated; }  // KV tokens readable
};

// Per-layer component times and exposed wall time, all in double
// microseconds. Event offsets are cumulative from layer start.
struct LayerTiming {
  double slice_us = 0;
  double send_us = 0;  // wire occupancy of the outbound transfer(s)
  double attn_us = 0;
  double ret_us = 0;
  double layer_us = 0;
  double off_slice = 0, off_send = 0, off_attn = 0;
};

struct StreamState {
  std::vector<std::int32_t> running;
  bool iter_active = false;
  bool boundary_scheduled = false;
  std::int64_t iter_start_us = 0;
  std::int64_t iter_dur_us = 0;
};

class Engine {
 public:
  Engine(const LlmSpec& model, const ClusterConfig& cluster, std::span<const TraceRecord> trace,
         const SimOptions& options, bool homogeneous)
      : model_(model), cluster_(cluster), options_(options), homogeneous_(homogeneous) {
    model_.validate();
    cluster_.validate();
    options_.eff.validate();
    if (options_.headroom_frac < 0 || options_.headroom_frac >= 1)
      throw ValidationError("headroom_frac must be in [0,1)");

    kv_per_token_ = kv_bytes_per_token(model_);
    compute_pool_ = aggregate(cluster_.compute_devices);

    if (homogeneous_) {
      if (cluster_.mode != ClusterMode::homogeneous_tp)
        throw ValidationError("homogeneous run requires a homogeneous-TP cluster");
      if (options_.n_batches > 1)
        throw ValidationError("staggered pipelining requires disaggregated mode");
      if (model_.weight_bytes >= compute_pool_.mem_bytes)
        throw Error("model weights exceed pool memory");
      const double cap = compute_pool_.mem_bytes * (1.0 - options_.headroom_frac) -
                         model_.weight_bytes;
      if (cap <= 0) throw Error("model weights plus headroom exceed pool memory");
      ledger_ = KvLedger(cap);
      n_streams_ = 1;
    } else {
      if (cluster_.mode != ClusterMode::disaggregated)
        throw ValidationError("disaggregated run requires a disaggregated cluster");
      memory_pool_ = aggregate(cluster_.memory_devices);
      preset_ = net_preset(cluster_.network);
      n_streams_ = std::max<std::int64_t>(1, options_.n_batches);
      replicas_ = n_streams_ >= 2 ? n_streams_ - 1 : 1;
      if (n_streams_ >= 2 && cluster_.compute_count() % replicas_ != 0)
        throw ValidationError("compute pool must divide evenly into " +
                              std::to_string(replicas_) + " model replicas");
      if (model_.weight_bytes > compute_pool_.mem_bytes / static_cast<double>(replicas_))
        throw Error("model weights exceed compute-pool (replica) memory");
      ledger_ = KvLedger(memory_pool_.mem_bytes * (1.0 - options_.headroom_frac));
    }

    requests_.reserve(trace.size());
    for (const auto& rec : trace) {
      rec.validate();
      Request r;
      r.arrival_us = std::llround(rec.arrival_s * 1e6);
      r.prompt = rec.prompt_tokens;
      r.output = rec.output_tokens;
      requests_.push_back(r);
    }
    streams_.resize(static_cast<std::size_t>(n_streams_));
  }

  SimMetrics run() {
    for (std::size_t i = 0; i < requests_.size(); ++i)
      push({requests_[i].arrival_us, 0, EventKind::arrival, 0, static_cast<std::int32_t>(i)});

    while (!heap_.empty()) {
      Event ev = heap_.top();
      heap_.pop();
      ledger_.assert_ok();  // invariant holds at every event timestamp
      integrate_batch(ev.time_us);
      switch (ev.kind) {
        case EventKind::arrival:
          on_arrival(ev);
          break;
        case EventKind::iter_boundary:
          on_boundary(ev);
          break;
        default:
          break;  // slice_done / xfer_done / attn_done are observation points
      }
    }
    return finish();
  }

 private:
  void push(Event ev) {
    ev.seq = next_seq_++;
    heap_.push(ev);
  }

  void integrate_batch(std::int64_t now_us) {
    std::int64_t total = 0;
    for (const auto& s : streams_) total += static_cast<std::int64_t>(s.running.size());
    batch_integral_ += static_cast<double>(total) * static_cast<double>(now_us - last_event_us_);
    last_event_us_ = now_us;
    max_batch_ = std::max(max_batch_, total);
  }

  void on_arrival(const Event& ev) {
    queue_.push_back(ev.request);
    for (std::int32_t s = 0; s < static_cast<std::int32_t>(n_streams_); ++s) {
      auto& st = streams_[static_cast<std::size_t>(s)];
      if (!st.iter_active && !st.boundary_scheduled) {
        st.boundary_scheduled = true;
        push({ev.time_us, 0, EventKind::iter_boundary, s, -1});
      }
    }
  }

  std::int64_t running_total() const {
    std::int64_t total = 0;
    for (const auto& s : streams_) total += static_cast<std::int64_t>(s.running.size());
    return total;
  }

  void on_boundary(const Event& ev) {
    auto& st = streams_[static_cast<std::size_t>(ev.stream)];
    st.boundary_scheduled = false;
    const std::int64_t now = ev.time_us;

    std::int64_t completions = 0;
    std::int64_t admitted = 0;
    if (st.iter_active) {
      st.iter_active = false;
      // Credit one token per running request for the finished iteration.
      const auto batch = static_cast<std::int64_t>(st.running.size());
      tokens_generated_ += batch;
      last_credit_us_ = now;
      tbt_samples_.push_back({st.iter_dur_us, batch});
      for (std::int32_t idx : st.running) requests_[static_cast<std::size_t>(idx)].generated++;
      // Completions release their whole reservation.
      std::vector<std::int32_t> still_running;
      for (std::int32_t idx : st.running) {
        auto& r = requests_[static_cast<std::size_t>(idx)];
        if (r.generated >= r.output) {
          r.done = true;
          completed_++;
          completions++;
          ledger_.release(static_cast<double>(r.prompt + r.output) * kv_per_token_,
                          static_cast<double>(r.prompt + r.output) * kv_per_token_);
        } else {
          still_running.push_back(idx);
        }
      }
      st.running = std::move(still_running);
    }

    // FIFO admission while the full reservation fits. Pipelined streams fill
    // only up to their fair share of the work known right now, which keeps
    // the sub-batches level and sends arrivals to the smallest one.
    std::int64_t fair_share = std::numeric_limits<std::int64_t>::max();
    if (n_streams_ > 1) {
      std::int64_t arrived_waiting = 0;
      for (std::int32_t idx : queue_) {
        if (requests_[static_cast<std::size_t>(idx)].arrival_us > now) break;
        arrived_waiting++;
      }
      fair_share = (running_total() + arrived_waiting + n_streams_ - 1) / n_streams_;
    }
    while (!queue_.empty()) {
      const std::int32_t idx = queue_.front();
      const auto& r = requests_[static_cast<std::size_t>(idx)];
      if (r.arrival_us > now) break;
      if (static_cast<std::int64_t>(st.running.size()) >= fair_share) break;
      const double full = static_cast<double>(r.prompt + r.output) * kv_per_token_;
      if (!ledger_.try_admit(full, static_cast<double>(r.prompt) * kv_per_token_)) break;
      st.running.push_back(idx);
      admitted++;
      queue_.pop_front();
    }

    // Completions may have freed capacity (or the fair share may have left
    // work) that an idle sibling can take. Only wake siblings when this
    // boundary changed state, otherwise empty streams would wake each other
    // forever at the same timestamp.
    if (!queue_.empty() && (completions > 0 || admitted > 0)) {
      const std::int64_t head_arrival =
          requests_[static_cast<std::size_t>(queue_.front())].arrival_us;
      if (head_arrival <= now) {
        for (std::int32_t s = 0; s < static_cast<std::int32_t>(n_streams_); ++s) {
          auto& other = streams_[static_cast<std::size_t>(s)];
          if (s != ev.stream && !other.iter_active && !other.boundary_scheduled) {
            other.boundary_scheduled = true;
            push({now, 0, EventKind::iter_boundary, s, -1});
          }
        }
      }
    }

    if (st.running.empty()) return;  // idle; the next arrival reschedules us

    // The token produced by the upcoming iteration occupies cache as it is
    // written; charge it up front, inside the admission-time commitment.
    for (std::size_t i = 0; i < st.running.size(); ++i) ledger_.grow(kv_per_token_);

    schedule_iteration(ev.stream, now);
  }

  LayerTiming layer_timing(std::int64_t batch, std::int64_t context_tokens,
                           const PoolCapacity& model_pool) const {
    const auto layers = static_cast<double>(model_.layers);
    LayerTiming t;

    const RooflineResult m =
        roofline_time(nonattn_cost(model_, batch), model_pool, options_.eff, OpKind::gemm);
    t.slice_us = m.seconds * 1e6 / layers;

    OpCost attn;
    attn.flops = 4.0 * static_cast<double>(model_.hidden_dim) * layers *
                 static_cast<double>(context_tokens);
    attn.bytes = kv_per_token_ * static_cast<double>(context_tokens);
    const RooflineResult a = roofline_time(attn, homogeneous_ ? model_pool : memory_pool_,
                                           options_.eff, OpKind::attention);
    t.attn_us = a.seconds * 1e6 / layers;

    if (homogeneous_) {
      t.layer_us = t.slice_us + t.attn_us;
      t.off_slice = t.slice_us;
      t.off_attn = t.off_send = t.layer_us;
      return t;
    }

    const double e = static_cast<double>(model_.bytes_per_elem);
    const double d = static_cast<double>(model_.hidden_dim);
    const double b = static_cast<double>(batch);
    const double q_bytes = e * d * b;
    const double kv_bytes = 2.0 * e * d * b / static_cast<double>(model_.gqa_group);
    const double out_bytes = e * d * b;
    t.ret_us = xfer_time(out_bytes, preset_) * 1e6;

    if (!options_.overlap) {
      // One outbound message per layer carrying Q and KV together.
      t.send_us = xfer_time(q_bytes + kv_bytes, preset_) * 1e6;
      t.off_slice = t.slice_us;
      t.off_send = t.slice_us + t.send_us;
      t.off_attn = t.off_send + t.attn_us;
      t.layer_us = t.off_attn + t.ret_us;
      return t;
    }

    // Resource-utilization overlapping: Q leaves at the Q-proj point
    // (mid-slice), attention over the previous tokens starts on Q arrival,
    // KV leaves at slice end and only the new-token tail waits for it.
    const double xfer_q_us = xfer_time(q_bytes, preset_) * 1e6;
    const double xfer_kv_us = xfer_time(kv_bytes, preset_) * 1e6;
    const double q_arrival = t.slice_us / 2 + xfer_q_us;
    const double kv_arrival = t.slice_us + xfer_kv_us;
    const double prev_frac = static_cast<double>(context_tokens) /
                             static_cast<double>(context_tokens + batch);
    const double attn_prev = t.attn_us * prev_frac;
    const double attn_new = t.attn_us - attn_prev;
    const double attn_done = std::max(kv_arrival, q_arrival + attn_prev) + attn_new;
    t.send_us = xfer_q_us + xfer_kv_us;
    t.off_slice = t.slice_us;
    t.off_send = kv_arrival;
    t.off_attn = std::max(attn_done, t.off_send);
    t.layer_us = std::max(t.off_attn + t.ret_us, t.slice_us);
    return t;
  }

  void schedule_iteration(std::int32_t stream, std::int64_t now) {
    auto& st = streams_[static_cast<std::size_t>(stream)];
    const auto batch = static_cast<std::int64_t>(st.running.size());
    std::int64_t context_tokens = 0;
    for (std::int32_t idx : st.running)
      context_tokens += requests_[static_cast<std::size_t>(idx)].context();

    PoolCapacity model_pool = compute_pool_;
    if (n_streams_ >= 2) {
      model_pool.peak_flops /= static_cast<double>(replicas_);
      model_pool.mem_bw /= static_cast<double>(replicas_);
      model_pool.mem_bytes /= static_cast<double>(replicas_);
    }

    const LayerTiming t = layer_timing(batch, context_tokens, model_pool);
    const double layers = static_cast<double>(model_.layers);
    double iter_us = layers * t.layer_us;

    std::int64_t active_streams = 0;
    for (const auto& s : streams_)
      if (!s.running.empty()) active_streams++;
    if (n_streams_ >= 2 && active_streams >= 2) {
      // Staggered pipelining, occupancy form: per cycle every active
      // sub-batch runs once, their model passes share n-1 replicas, and the
      // pool and the wire each serve all of them in sequence. The cycle
      // cannot beat the dependency path either.
      const double n = static_cast<double>(active_streams);
      const double t_model = layers * t.slice_us;
      const double t_attn = layers * t.attn_us;
      const double t_wire = layers * (t.send_us + t.ret_us);
      const double replica_share = std::min(n, static_cast<double>(replicas_));
      iter_us = std::max({iter_us, n / replica_share * t_model, n * t_attn, n * t_wire});
    }

    const std::int64_t dur = std::max<std::int64_t>(1, std::llround(iter_us));
    st.iter_active = true;
    st.iter_start_us = now;
    st.iter_dur_us = dur;

    busy_model_us_ += layers * t.slice_us;
    busy_attn_us_ += layers * t.attn_us;
    busy_net_us_ += layers * (t.send_us + t.ret_us);

    // Layer-level observation events (single-stream runs only; pipelined
    // sub-batches interleave across streams and are tracked at boundaries).
    if (n_streams_ == 1) {
      auto at = [&](double off_us) {
        return now + std::min<std::int64_t>(dur, static_cast<std::int64_t>(std::llround(off_us)));
      };
      for (std::int64_t layer = 0; layer < model_.layers; ++layer) {
        const double base = static_cast<double>(layer) * t.layer_us;
        push({at(base + t.off_slice), 0, EventKind::slice_done, stream, -1});
        if (!homogeneous_) push({at(base + t.off_send), 0, EventKind::xfer_done, stream, -1});
        push({at(base + t.off_attn), 0, EventKind::attn_done, stream, -1});
        if (!homogeneous_)
          push({at(base + t.layer_us), 0, EventKind::xfer_done, stream, -1});
      }
    }

    st.boundary_scheduled = true;
    push({now + dur, 0, EventKind::iter_boundary, stream, -1});
  }

  SimMetrics finish() {
    SimMetrics m;
    m.seed = options_.seed;
    m.tokens_generated = tokens_generated_;
    m.requests_completed = completed_;
    m.requests_unfinished = static_cast<std::int64_t>(requests_.size()) - completed_;
    m.cost_per_hour = cluster_.cost_per_hour();
    m.kv_capacity_bytes = ledger_.capacity();
    m.kv_peak_bytes = ledger_.peak_used();
    m.max_batch_observed = max_batch_;
    if (tokens_generated_ == 0 || last_credit_us_ == 0) return m;

    m.wall_time_s = static_cast<double>(last_credit_us_) / 1e6;
    m.throughput = static_cast<double>(tokens_generated_) / m.wall_time_s;
    m.tokens_per_dollar = m.throughput * 3600.0 / m.cost_per_hour;
    m.avg_batch = batch_integral_ / static_cast<double>(last_credit_us_);

    std::sort(tbt_samples_.begin(), tbt_samples_.end());
    double weighted_sum = 0;
    std::int64_t count = 0;
    for (const auto& [dur, n] : tbt_samples_) {
      weighted_sum += static_cast<double>(dur) * static_cast<double>(n);
      count += n;
    }
    m.tbt.mean_s = weighted_sum / static_cast<double>(count) / 1e6;
    auto quantile = [&](double q) {
      const auto target = static_cast<std::int64_t>(std::ceil(q * static_cast<double>(count)));
      std::int64_t seen = 0;
      for (const auto& [dur, n] : tbt_samples_) {
        seen += n;
        if (seen >= target) return static_cast<double>(dur) / 1e6;
      }
      return static_cast<double>(tbt_samples_.back().first) / 1e6;
    };
    m.tbt.p50_s = quantile(0.50);
    m.tbt.p99_s = quantile(0.99);

    const double wall_us = static_cast<double>(last_credit_us_);
    if (homogeneous_) {
      m.util["pool"] = (busy_model_us_ + busy_attn_us_) / wall_us;
    } else {
      m.util["compute_pool"] = busy_model_us_ / (wall_us * static_cast<double>(replicas_));
      m.util["memory_pool"] = busy_attn_us_ / wall_us;
      m.util["network"] = busy_net_us_ / wall_us;
    }
    return m;
  }

  LlmSpec model_;
  ClusterConfig cluster_;
  SimOptions options_;
  bool homogeneous_ = false;

  double kv_per_token_ = 0;
  PoolCapacity compute_pool_{};
  PoolCapacity memory_pool_{};
  NetPreset preset_{};
  std::int64_t n_streams_ = 1;
  std::int64_t replicas_ = 1;

  std::vector<Request> requests_;
  std::vector<StreamState> streams_;
  std::deque<std::int32_t> queue_;
  KvLedger ledger_;
  std::priority_queue<Event, std::vector<Event>, EventLater> heap_;
  std::uint64_t next_seq_ = 0;

  std::int64_t tokens_generated_ = 0;
  std::int64_t completed_ = 0;
  std::int64_t last_credit_us_ = 0;
  std::int64_t last_event_us_ = 0;
  std::int64_t max_batch_ = 0;
  double batch_integral_ = 0;
  double busy_model_us_ = 0;
  double busy_attn_us_ = 0;
  double busy_net_us_ = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> tbt_samples_;  // (duration, weight)
};

}  // namespace

SimMetrics run_disaggregated(const LlmSpec& model, const ClusterConfig& cluster,
                             std::span<const TraceRecord> trace, const SimOptions& options) {
  if (trace.empty()) throw Error("trace is empty");
  Engine engine(model, cluster, trace, options, /*homogeneous=*/false);
  return engine.run();
}

SimMetrics run_homogeneous(const LlmSpec& model, const ClusterConfig& cluster,
                           std::span<const TraceRecord> trace, const SimOptions& options) {
  if (trace.empty()) {
    // Zero requests are well-defined here: all-zero metrics.
    SimMetrics m;
    m.seed = options.seed;
    m.cost_per_hour = cluster.cost_per_hour();
    return m;
  }
  Engine engine(model, cluster, trace, options, /*homogeneous=*/true);
  return engine.run();
}

ojson metrics_to_json(const SimMetrics& m) {
  ojson j;
  j["tokens_generated"] = m.tokens_generated;
  j["wall_time"] = m.wall_time_s;
  j["throughput"] = m.throughput;
  j["tbt"] = ojson{{"mean", m.tbt.mean_s}, {"p50", m.tbt.p50_s}, {"p99", m.tbt.p99_s}};
  j["avg_batch"] = m.avg_batch;
  j["max_batch_observed"] = m.max_batch_observed;
  ojson util;
  for (const auto& [k, v] : m.util) util[k] = v;
  j["util"] = std::move(util);
  j["cost_per_hour"] = m.cost_per_hour;
  j["tokens_per_dollar"] = m.tokens_per_dollar;
  j["requests_completed"] = m.requests_completed;
  j["requests_unfinished"] = m.requests_unfinished;
  j["kv_capacity_bytes"] = m.kv_capacity_bytes;
  j["kv_peak_bytes"] = m.kv_peak_bytes;
  j["seed"] = m.seed;
  return j;
}

}  // namespace disagg
