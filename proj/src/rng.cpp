#include "tvs/rng.hpp"

#include <stdexcept>

#include "tvs/stats.hpp"

namespace tvs {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer.
std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

RngStream::RngStream(std::uint64_t base_seed, std::uint64_t stream_id) {
  key_ = mix(mix(base_seed + kGolden) ^ mix(stream_id * kGolden + 0x1234567897531ULL));
}

std::uint64_t RngStream::next_u64() {
  counter_ += kGolden;
  return mix(key_ + counter_);
}

double RngStream::next_double() {
  // 53 random bits shifted into (0,1): never exactly 0 or 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("RngStream::next_below: bound must be positive");
  std::uint64_t threshold = (~bound + 1) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double RngStream::next_normal() { return std_normal_quantile(next_double()); }

RngStream RngStream::substream(std::uint64_t id) const { return RngStream(key_, id + 1); }

std::vector<int> RngStream::sample_without_replacement(int n, int k) {
  if (k > n) throw std::invalid_argument("sample_without_replacement: k exceeds n");
  // Partial Fisher-Yates over an index vector.
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(next_below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace tvs
