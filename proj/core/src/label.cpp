#include "progresskit/label.hpp"

#include <stdexcept>
#include <string>

namespace progresskit {

double bucket_midpoint(int q, int q_buckets) {
  if (q_buckets < 2) throw std::invalid_argument("bucket count must be >= 2");
  if (q < 1 || q > q_buckets) throw std::invalid_argument("bucket index out of range");
  return (q - 0.5) / q_buckets;
}

int bucketize(std::int64_t k, std::int64_t m, int q_buckets) {
  if (q_buckets < 2) throw std::invalid_argument("bucket count must be >= 2");
  if (m < 1) throw std::invalid_argument("trace length must be >= 1");
  if (k < 1 || k > m) {
    throw std::out_of_range("position " + std::to_string(k) + " outside [1, " +
                            std::to_string(m) + "]");
  }
  if (k == m) return q_buckets;
  // k/m in [(q-1)/Q, q/Q)  <=>  q = floor(kQ/m) + 1, exact in integers.
  return static_cast<int>(k * q_buckets / m) + 1;
}

double realized_progress(std::int64_t prefix_len, std::int64_t total_len) {
  if (total_len < 1) throw std::invalid_argument("total length must be >= 1");
  if (prefix_len < 1 || prefix_len > total_len) {
    throw std::out_of_range("prefix length outside [1, total]");
  }
  return static_cast<double>(prefix_len) / static_cast<double>(total_len);
}

double rollout_progress(std::int64_t prefix_len, std::int64_t continuation_len) {
  if (prefix_len < 1) throw std::invalid_argument("prefix length must be >= 1");
  if (continuation_len < 0) throw std::invalid_argument("continuation length must be >= 0");
  return realized_progress(prefix_len, prefix_len + continuation_len);
}

}  // namespace progresskit
