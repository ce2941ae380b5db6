#pragma once

#include <cstdint>

namespace progresskit {

inline constexpr int kDefaultBucketCount = 10;

// Midpoint of bucket q out of Q: (q - 0.5) / Q.
double bucket_midpoint(int q, int q_buckets);

// Quantizes the normalized position k/m into one of Q intervals
// [(q-1)/Q, q/Q); k == m lands in bucket Q since the last interval is closed
// at 1. Positions are 1-based: 1 <= k <= m.
int bucketize(std::int64_t k, std::int64_t m, int q_buckets = kDefaultBucketCount);

// Fraction of a completed trace covered by a prefix: prefix_len / total_len.
double realized_progress(std::int64_t prefix_len, std::int64_t total_len);

// Progress implied by one sampled continuation: k / (k + continuation_len).
double rollout_progress(std::int64_t prefix_len, std::int64_t continuation_len);

}  // namespace progresskit
