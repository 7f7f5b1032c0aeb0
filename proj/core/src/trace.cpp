#include "disagg/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace disagg {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

// U(0,1) from the top 53 bits, never exactly 0 (log-safe).
double next_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1p-53;
}

// Box-Muller; one normal per call keeps the draw order obvious.
double next_normal(std::mt19937_64& rng) {
  const double u1 = next_uniform(rng);
  const double u2 = next_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Lognormal with the requested mean: mu = log(mean) - sigma^2/2.
std::int64_t next_length(std::mt19937_64& rng, double mean, double sigma) {
  const double mu = std::log(mean) - 0.5 * sigma * sigma;
  const double x = std::exp(mu + sigma * next_normal(rng));
  return std::max<std::int64_t>(1, std::llround(x));
}

}  // namespace

void TraceProfile::validate() const {
  require(n_requests >= 1, "n_requests must be >= 1");
  require(mean_prompt >= 1, "mean_prompt must be >= 1");
  require(mean_output >= 1, "mean_output must be >= 1");
  require(arrival_rate > 0, "arrival_rate must be > 0");
  require(sigma > 0, "sigma must be > 0");
}

std::vector<TraceRecord> gen_trace(const TraceProfile& profile) {
  profile.validate();
  std::mt19937_64 rng(profile.seed);
  std::vector<TraceRecord> trace;
  trace.reserve(static_cast<std::size_t>(profile.n_requests));
  double clock_s = 0;
  for (std::int64_t i = 0; i < profile.n_requests; ++i) {
    clock_s += -std::log(next_uniform(rng)) / profile.arrival_rate;  // exponential gap
    TraceRecord r;
    char id[32];
    std::snprintf(id, sizeof(id), "r%06lld", static_cast<long long>(i));
    r.request_id = id;
    r.arrival_s = clock_s;
    r.prompt_tokens = next_length(rng, profile.mean_prompt, profile.sigma);
    r.output_tokens = next_length(rng, profile.mean_output, profile.sigma);
    r.validate();
    trace.push_back(std::move(r));
  }
  return trace;
}

std::string trace_to_csv(const std::vector<TraceRecord>& trace) {
  std::ostringstream os;
  os << "request_id,arrival_s,prompt_tokens,output_tokens\n";
  char buf[64];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof(buf), "%.6f", r.arrival_s);
    os << r.request_id << ',' << buf << ',' << r.prompt_tokens << ',' << r.output_tokens << '\n';
  }
  return os.str();
}

std::vector<TraceRecord> trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty trace file");
  if (line != "request_id,arrival_s,prompt_tokens,output_tokens")
    throw ValidationError("trace CSV header must be "
                          "'request_id,arrival_s,prompt_tokens,output_tokens'");
  std::vector<TraceRecord> trace;
  std::int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    TraceRecord r;
    std::string field;
    try {
      std::getline(ls, r.request_id, ',');
      std::getline(ls, field, ',');
      r.arrival_s = std::stod(field);
      std::getline(ls, field, ',');
      r.prompt_tokens = std::stoll(field);
      std::getline(ls, field, ',');
      r.output_tokens = std::stoll(field);
    } catch (const std::exception&) {
      throw ValidationError("malformed trace line " + std::to_string(lineno));
    }
    r.validate();
    trace.push_back(std::move(r));
  }
  return trace;
}

std::vector<TraceRecord> load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return trace_from_csv(buf.str());
}

void write_trace_file(const std::vector<TraceRecord>& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << trace_to_csv(trace);
}

}  // namespace disagg
