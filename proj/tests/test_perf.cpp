#include <cmath>
#include <random>

#include "doctest.h"
#include "disagg/catalog.hpp"
#include "disagg/perf.hpp"

using namespace disagg;

namespace {

const LlmSpec& llama70b() { return builtin_catalog().model("llama3-70b"); }
const LlmSpec& llama65b() { return builtin_catalog().model("llama-65b"); }
const DeviceSpec& h100() { return builtin_catalog().device("H100"); }
const DeviceSpec& h20() { return builtin_catalog().device("H20"); }

}  // namespace

TEST_CASE("nonattn_cost matches the closed forms") {
  const OpCost c = nonattn_cost(llama70b(), 256);
  CHECK(c.flops == 2.0 * 70e9 * 256);  // 3.584e13, exact in doubles
  CHECK(c.flops == doctest::Approx(3.584e13));

  const OpCost c1 = nonattn_cost(llama70b(), 1);
  CHECK(c1.bytes == 2.0 * (70e9 + 2.0 * 8192));  // ~1.4000e11
  CHECK(c1.bytes == doctest::Approx(1.4000e11).epsilon(1e-4));

  CHECK_THROWS_AS(nonattn_cost(llama70b(), 0), ValidationError);
}

TEST_CASE("nonattn_intensity: ~B at small B, strictly increasing") {
  CHECK(nonattn_intensity(llama70b(), 1) == doctest::Approx(1.0).epsilon(1e-3));

  double prev = 0;
  for (std::int64_t b : {1, 8, 64, 512}) {
    const double i = nonattn_intensity(llama70b(), b);
    CHECK(i > prev);
    prev = i;
  }
}

TEST_CASE("nonattn_intensity matches exact integer arithmetic at B=128") {
  // Independent route: exact integer numerator/denominator, long double divide.
  const long double num = 2.0L * 70000000000.0L * 128.0L;
  const long double den = 2.0L * (70000000000.0L + 2.0L * 128.0L * 8192.0L);
  const double want = static_cast<double>(num / den);
  const double got = nonattn_intensity(llama70b(), 128);
  CHECK(std::abs(got - want) / want <= 1e-12);
}

TEST_CASE("attn_cost intensity is exactly 2G/e for all B, l") {
  for (std::int64_t b : {1, 7, 300}) {
    for (std::int64_t l : {1, 512, 8192}) {
      const OpCost c70 = attn_cost(llama70b(), b, l);
      CHECK(c70.flops / c70.bytes == 8.0);  // G=8, e=2
      const OpCost c65 = attn_cost(llama65b(), b, l);
      CHECK(c65.flops / c65.bytes == 1.0);  // G=1, e=2
    }
  }

  const OpCost once = attn_cost(llama70b(), 5, 100);
  const OpCost twice = attn_cost(llama70b(), 10, 100);
  CHECK(twice.flops == 2 * once.flops);
  CHECK(twice.bytes == 2 * once.bytes);
}

TEST_CASE("attn_cost bytes equal kv_bytes_per_token * l * B exactly") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const std::int64_t b = 1 + static_cast<std::int64_t>(rng() % 1000);
    const std::int64_t l = 1 + static_cast<std::int64_t>(rng() % 32768);
    const LlmSpec& m = rng() % 2 ? llama70b() : llama65b();
    CHECK(attn_cost(m, b, l).bytes == kv_bytes_per_token(m) * double(l) * double(b));
  }
}

TEST_CASE("roofline_time basics") {
  const EfficiencyProfile ideal{1.0, 1.0};

  // 3.584e13 flops, nothing to stream: pure division, compute-bound.
  const RooflineResult r = roofline_time(OpCost{3.584e13, 0}, h100(), 2, ideal, OpKind::gemm);
  CHECK(r.seconds == doctest::Approx(1.812e-2).epsilon(1e-3));
  CHECK(r.bound == Bound::compute);

  const RooflineResult z = roofline_time(OpCost{0, 0}, h100(), 1, ideal, OpKind::gemm);
  CHECK(z.seconds == 0.0);

  // LLaMA3-70B attention, B=300, l=8192 on 4xH20 at attn_mbu 0.8.
  const OpCost ac = attn_cost(llama70b(), 300, 8192);
  CHECK(ac.bytes == doctest::Approx(8.053e11).epsilon(1e-3));
  const RooflineResult at =
      roofline_time(ac, h20(), 4, EfficiencyProfile{0.55, 0.8}, OpKind::attention);
  CHECK(at.seconds == doctest::Approx(6.29e-2).epsilon(1e-3));
  CHECK(at.bound == Bound::bandwidth);
}

TEST_CASE("roofline properties: max of terms, exact pool scaling") {
  std::mt19937_64 rng(7);
  const EfficiencyProfile eff{0.55, 0.8};
  for (int i = 0; i < 200; ++i) {
    OpCost c{double(rng() % 1000000 + 1) * 1e6, double(rng() % 1000000 + 1) * 1e3};
    const PoolCapacity p1 = aggregate(h100(), 1);
    const RooflineResult r1 = roofline_time(c, p1, eff, OpKind::gemm);
    const double t_compute = c.flops / (p1.peak_flops * eff.gemm_eff);
    const double t_memory = c.bytes / (p1.mem_bw * eff.gemm_eff);
    CHECK(r1.seconds == std::max(t_compute, t_memory));

    const RooflineResult r2 = roofline_time(c, h100(), 2, eff, OpKind::gemm);
    CHECK(r2.seconds == r1.seconds / 2);  // power-of-two scaling is exact
    const RooflineResult r3 = roofline_time(c, h100(), 3, eff, OpKind::gemm);
    CHECK(r3.seconds == doctest::Approx(r1.seconds / 3).epsilon(1e-12));
  }
}

TEST_CASE("mfu / mbu") {
  const PoolCapacity pool = aggregate(h100(), 1);

  // Compute-bound at efficiency 0.5 means MFU is exactly 0.5.
  const EfficiencyProfile half{0.5, 0.5};
  const OpCost big_flops{1e15, 1.0};
  const RooflineResult r = roofline_time(big_flops, pool, half, OpKind::gemm);
  CHECK(r.bound == Bound::compute);
  CHECK(mfu(big_flops.flops, r.seconds, pool) == doctest::Approx(0.5).epsilon(1e-12));

  // Small-batch decode is bandwidth-bound with low MFU; with the default
  // profile the B=64 point sits well under the 20% band edge.
  const OpCost c64 = nonattn_cost(llama70b(), 64);
  const EfficiencyProfile def{};
  const RooflineResult r64 = roofline_time(c64, pool, def, OpKind::gemm);
  CHECK(r64.bound == Bound::bandwidth);
  CHECK(mfu(c64.flops, r64.seconds, pool) < 0.20);
  const RooflineResult r64_ideal = roofline_time(c64, pool, {1.0, 1.0}, OpKind::gemm);
  CHECK(r64_ideal.bound == Bound::bandwidth);

  // Attention at B=20: bandwidth-bound, so MBU equals the attn_mbu knob.
  const OpCost a20 = attn_cost(llama70b(), 20, 4096);
  const EfficiencyProfile eff07{0.55, 0.7};
  const RooflineResult ra = roofline_time(a20, pool, eff07, OpKind::attention);
  CHECK(mbu(a20.bytes, ra.seconds, pool) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(mbu(a20.bytes, ra.seconds, pool) >= 0.70 - 1e-12);

  CHECK_THROWS_AS(mfu(1.0, 0.0, pool), ValidationError);
  CHECK_THROWS_AS(mbu(1.0, -1.0, pool), ValidationError);
}

TEST_CASE("kv_bytes_per_token and capacity") {
  CHECK(kv_bytes_per_token(llama70b()) == 327680.0);
  // G=1: the same 2 e (d/G) L, nothing cancels.
  CHECK(kv_bytes_per_token(llama65b()) == 2621440.0);

  // One H100's worth of memory holds 29 requests at l=8192.
  CHECK(max_batch(80e9, 0, llama70b(), 8192, 0) == 29);
}

TEST_CASE("max_batch examples") {
  // 4xH100 TP pool, weights resident, no headroom.
  CHECK(max_batch(320e9, 137.5e9, llama70b(), 8192, 0) == 67);
  // 4xH20 attention pool, weights elsewhere.
  CHECK(max_batch(384e9, 0, llama70b(), 8192, 0) == 143);
  // Equal-cost capacity ratio ~2.10x.
  CHECK(384e9 / (320e9 - 137.5e9) == doctest::Approx(2.104).epsilon(1e-3));

  CHECK_THROWS_AS(max_batch(100e9, 137.5e9, llama70b(), 8192, 0), Error);
}

TEST_CASE("comm_volume") {
  CHECK(comm_volume(llama70b(), 300) == 884736000.0);
  // G=1 turns the factor into 4edBL.
  CHECK(comm_volume(llama65b(), 10) == 4.0 * 2 * 8192 * 10 * 80);
  CHECK(comm_volume(llama70b(), 600) == 2 * comm_volume(llama70b(), 300));
}

TEST_CASE("min_bandwidth") {
  TimingEstimate t;
  t.t_model = 0.100;
  t.t_attn = 0.050;
  const double bw = min_bandwidth(llama70b(), 300, 0.2, t);
  CHECK(bw == doctest::Approx(29.4912e9).epsilon(1e-9));

  const double bw2 = min_bandwidth(llama70b(), 300, 0.4, t);
  CHECK(bw2 == doctest::Approx(bw / 2).epsilon(1e-12));

  TimingEstimate bad;
  CHECK_THROWS_AS(min_bandwidth(llama70b(), 300, 0.2, bad), ValidationError);
  CHECK_THROWS_AS(min_bandwidth(llama70b(), 300, 0.0, t), ValidationError);
}

TEST_CASE("min_bandwidth * alpha * (t_m + t_a) returns comm_volume") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const std::int64_t b = 1 + static_cast<std::int64_t>(rng() % 2000);
    TimingEstimate t;
    t.t_model = 1e-4 + double(rng() % 1000) / 1e4;
    t.t_attn = 1e-4 + double(rng() % 1000) / 1e4;
    const double alpha = 0.01 + double(rng() % 100) / 100.0;
    const double bw = min_bandwidth(llama70b(), b, alpha, t);
    const double back = bw * alpha * (t.t_model + t.t_attn);
    CHECK(std::abs(back - comm_volume(llama70b(), b)) / comm_volume(llama70b(), b) <= 1e-12);
  }
}

TEST_CASE("min_bandwidth is non-increasing in l with roofline timings") {
  const PoolCapacity compute = aggregate(h100(), 2);
  const PoolCapacity memory = aggregate(h20(), 4);
  double prev = std::numeric_limits<double>::infinity();
  for (std::int64_t l : {2048, 8192, 32768}) {
    const TimingEstimate t = estimate_iteration(llama70b(), compute, memory, {}, 300, l);
    const double bw = min_bandwidth(llama70b(), 300, 0.2, t);
    CHECK(bw <= prev);
    prev = bw;
  }
}

TEST_CASE("efficiency profile bounds") {
  CHECK_THROWS_AS((EfficiencyProfile{0.0, 0.5}.validate()), ValidationError);
  CHECK_THROWS_AS((EfficiencyProfile{0.5, 1.5}.validate()), ValidationError);
  CHECK_NOTHROW((EfficiencyProfile{1.0, 1.0}.validate()));
}
