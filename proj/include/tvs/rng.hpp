#pragma once

#include <cstdint>
#include <vector>

namespace tvs {

// Counter-based pseudo-random stream. The same (base_seed, stream_id)
// pair always produces the same sequence on every platform, and
// distinct stream ids give streams that are independent for the
// purposes of this project. Derivation is cheap, so workers grab a
// fresh substream per task instead of sharing state.
class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();

  // Uniform on the open interval (0,1).
  double next_double();

  // Uniform integer in [0, bound), bias-free.
  std::uint64_t next_below(std::uint64_t bound);

  // Standard normal via inverse CDF; reproducible across platforms.
  double next_normal();

  RngStream substream(std::uint64_t id) const;

  // k distinct indices from [0, n), in random order.
  std::vector<int> sample_without_replacement(int n, int k);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = static_cast<int>(next_below(static_cast<std::uint64_t>(i) + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace tvs
