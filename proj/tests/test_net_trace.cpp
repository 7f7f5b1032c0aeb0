#include <cmath>

#include "doctest.h"
#include "disagg/net.hpp"
#include "disagg/trace.hpp"

using namespace disagg;

TEST_CASE("preset round trips for near-zero payloads are exact") {
  CHECK(2 * xfer_time(0, net_preset("FHBN")) == 33.0e-6);
  CHECK(2 * xfer_time(0, net_preset("NCCL-GDR")) == 66.6e-6);
  CHECK(xfer_time(0, net_preset("ZERO")) == 0.0);
  CHECK(xfer_time(1e12, net_preset("ZERO")) == 0.0);
  CHECK_THROWS_AS(net_preset("carrier-pigeon"), LookupError);
  CHECK_THROWS_AS(xfer_time(-1, net_preset("FHBN")), ValidationError);
}

TEST_CASE("large transfers approach the achievable bandwidth") {
  const NetPreset& fhbn = net_preset("FHBN");
  const double eff_1gb = 1e9 / xfer_time(1e9, fhbn);
  CHECK(eff_1gb / 45.7e9 > 0.999);
  // Asymptotic slope recovers the preset exactly.
  const double slope = 1e9 / (xfer_time(2e9, fhbn) - xfer_time(1e9, fhbn));
  CHECK(slope == doctest::Approx(45.7e9).epsilon(1e-9));

  const NetPreset& nccl = net_preset("NCCL-GDR");
  const double nccl_slope = 1e9 / (xfer_time(2e9, nccl) - xfer_time(1e9, nccl));
  CHECK(nccl_slope == doctest::Approx(35.5e9).epsilon(1e-9));
}

TEST_CASE("gen_trace sample means land near the profile at scale") {
  TraceProfile profile;
  profile.n_requests = 19366;
  profile.mean_prompt = 1154.7;
  profile.mean_output = 211.1;
  profile.arrival_rate = 100;
  profile.seed = 7;
  const auto trace = gen_trace(profile);
  REQUIRE(trace.size() == 19366);

  double prompt_sum = 0, output_sum = 0;
  for (const auto& r : trace) {
    prompt_sum += double(r.prompt_tokens);
    output_sum += double(r.output_tokens);
  }
  CHECK(prompt_sum / 19366 == doctest::Approx(1154.7).epsilon(0.05));
  CHECK(output_sum / 19366 == doctest::Approx(211.1).epsilon(0.05));

  // Poisson arrivals: mean gap ~ 1/rate.
  CHECK(trace.back().arrival_s / 19366 == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("long-context profile") {
  TraceProfile profile;
  profile.n_requests = 12031;
  profile.mean_prompt = 12035.1;
  profile.mean_output = 342.6;
  profile.arrival_rate = 50;
  profile.seed = 3;
  const auto trace = gen_trace(profile);
  double prompt_sum = 0;
  for (const auto& r : trace) prompt_sum += double(r.prompt_tokens);
  CHECK(prompt_sum / double(trace.size()) == doctest::Approx(12035.1).epsilon(0.05));
}

TEST_CASE("identical seeds give identical CSV bytes") {
  TraceProfile profile;
  profile.n_requests = 500;
  profile.mean_prompt = 800;
  profile.mean_output = 100;
  profile.arrival_rate = 25;
  profile.seed = 99;
  const std::string a = trace_to_csv(gen_trace(profile));
  const std::string b = trace_to_csv(gen_trace(profile));
  CHECK(a == b);

  profile.seed = 100;
  CHECK(trace_to_csv(gen_trace(profile)) != a);
}

TEST_CASE("trace CSV round trip") {
  TraceProfile profile;
  profile.n_requests = 50;
  profile.mean_prompt = 128;
  profile.mean_output = 16;
  profile.arrival_rate = 10;
  profile.seed = 5;
  const auto trace = gen_trace(profile);
  const auto back = trace_from_csv(trace_to_csv(trace));
  REQUIRE(back.size() == trace.size());
  for (size_t i = 0; i < trace.size(); ++i) {
    CHECK(back[i].request_id == trace[i].request_id);
    CHECK(back[i].prompt_tokens == trace[i].prompt_tokens);
    CHECK(back[i].output_tokens == trace[i].output_tokens);
    // The CSV keeps microsecond precision, same as the simulator tick.
    CHECK(std::abs(back[i].arrival_s - trace[i].arrival_s) <= 5e-7);
  }

  CHECK_THROWS_AS(trace_from_csv("bogus header\n"), ValidationError);
  CHECK_THROWS_AS(trace_from_csv("request_id,arrival_s,prompt_tokens,output_tokens\nr0,x,1,1\n"),
                  ValidationError);
}

TEST_CASE("profile validation") {
  TraceProfile p;
  CHECK_THROWS_AS(gen_trace(p), ValidationError);
  p.n_requests = 10;
  p.mean_prompt = 100;
  p.mean_output = 10;
  p.arrival_rate = 0;
  CHECK_THROWS_AS(gen_trace(p), ValidationError);
}
