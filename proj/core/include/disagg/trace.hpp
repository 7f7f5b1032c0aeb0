#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "disagg/model.hpp"

namespace disagg {

// Synthetic request traces: lognormal prompt/output lengths around the given
// means, Poisson arrivals. Generation is hand-rolled on top of mt19937_64 so
// identical seeds give identical traces everywhere.
struct TraceProfile {
  std::int64_t n_requests = 0;
  double mean_prompt = 0;   // tokens
  double mean_output = 0;   // tokens
  double arrival_rate = 0;  // requests/s
  double sigma = 0.6;       // lognormal shape (of log), both length draws
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<TraceRecord> gen_trace(const TraceProfile& profile);

// CSV with header: request_id,arrival_s,prompt_tokens,output_tokens
std::string trace_to_csv(const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> trace_from_csv(const std::string& text);
std::vector<TraceRecord> load_trace_file(const std::string& path);
void write_trace_file(const std::vector<TraceRecord>& trace, const std::string& path);

}  // namespace disagg
