#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "disagg/model.hpp"

namespace disagg {

// Reference attention plus the mergeable partial form that lets the operator
// be split across token subsets (prev/new overlap) and across devices
// (head- or request-level partitioning), with identical results.
//
// Scalar is double for all shipped paths; float instantiations exist for
// tolerance experiments. Tolerances documented in tests refer to double.

template <typename T>
struct AttnInstance {
  std::vector<T> query;                 // d_head
  std::vector<std::vector<T>> keys;     // l rows of d_head
  std::vector<std::vector<T>> values;   // l rows of d_head
  T scale = 1;                          // typically 1/sqrt(d_head)

  std::int64_t length() const { return static_cast<std::int64_t>(keys.size()); }
  std::int64_t head_dim() const { return static_cast<std::int64_t>(query.size()); }
  void validate() const;  // equal row counts, consistent dims, finite entries
};

// (A_q(I) S_q(I), S_q(I)) in max-shifted form. The raw pair overflows for
// realistic logits, so acc and the denominator are stored relative to
// max_logit, with log_denom = log(sum exp(logit - max_logit)).
// Empty partial: token_count 0, acc all-zero, max_logit = log_denom = -inf.
template <typename T>
struct PartialAttention {
  std::vector<T> acc;  // sum exp(logit_j - max_logit) * v_j
  T log_denom = -std::numeric_limits<T>::infinity();
  T max_logit = -std::numeric_limits<T>::infinity();
  std::int64_t token_count = 0;

  static PartialAttention identity(std::int64_t head_dim);
  bool empty() const { return token_count == 0; }
};

// softmax(q K^T scale) V with max-subtraction.
template <typename T>
std::vector<T> exact_attention(const AttnInstance<T>& inst);

// Partial over an index subset; empty subsets give the identity element.
template <typename T>
PartialAttention<T> partial_attention(const AttnInstance<T>& inst,
                                      std::span<const std::int64_t> indices);

// Combine partials over disjoint token sets of one instance. Both inputs are
// re-shifted to the larger max_logit before summing, which reproduces
//   A_q(I) = (A_q(I1) S_q(I1) + A_q(I2) S_q(I2)) / (S_q(I1) + S_q(I2))
// without ever exponentiating an unshifted logit.
template <typename T>
PartialAttention<T> merge(const PartialAttention<T>& a, const PartialAttention<T>& b);

// acc / denom. Throws on the empty partial.
template <typename T>
std::vector<T> finalize(const PartialAttention<T>& p);

// Partials over [0, boundary) and [boundary, l); their merge finalizes to
// the full output. boundary == 0 or l yields an identity on one side.
template <typename T>
std::pair<PartialAttention<T>, PartialAttention<T>> split_prev_new(const AttnInstance<T>& inst,
                                                                   std::int64_t boundary);

// ---- multi-head helpers -------------------------------------------------

// Query head h reads KV head h / group (grouped-query attention); group = 1
// is classic multi-head.
template <typename T>
struct MultiHeadInstance {
  std::vector<std::vector<T>> queries;                 // one per query head
  std::vector<std::vector<std::vector<T>>> kv_keys;    // one l x d_head block per KV head
  std::vector<std::vector<std::vector<T>>> kv_values;
  T scale = 1;

  std::int64_t num_query_heads() const { return static_cast<std::int64_t>(queries.size()); }
  std::int64_t num_kv_heads() const { return static_cast<std::int64_t>(kv_keys.size()); }

  AttnInstance<T> head_instance(std::int64_t query_head) const;
};

// Concatenated per-head outputs, head-major.
template <typename T>
std::vector<std::vector<T>> multi_head_attention(const MultiHeadInstance<T>& inst);

// ---- work partitioning --------------------------------------------------

struct HeadRange {
  std::int64_t begin = 0;  // KV head indices [begin, end)
  std::int64_t end = 0;
};

// Contiguous equal-size KV-head ranges, one per device. Requires
// num_kv_heads % num_devices == 0; per-device load is identical.
std::vector<HeadRange> head_partition(std::int64_t num_kv_heads, std::int64_t num_devices);

struct RequestAssignment {
  std::vector<std::int64_t> device_of;  // per request
  std::vector<double> device_load;      // summed kv sizes
  double imbalance = 1.0;               // max load / mean load
};

// Greedy longest-first bin packing of per-request KV sizes.
RequestAssignment request_partition(std::span<const double> kv_sizes, std::int64_t num_devices);

}  // namespace disagg
