#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace peerlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Identifies one independent random stream. Draws depend only on the key
/// and the draw index, never on which thread or in what order streams run.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t episode = 0;
  std::uint64_t round = 0;
  std::uint64_t lane = 0;
};

/// Lane numbering used by the simulator.
namespace lanes {
inline constexpr std::uint64_t kTruth = 0;
inline constexpr std::uint64_t kAssignment = 1;
inline constexpr std::uint64_t kObservationBase = 1000;
inline constexpr std::uint64_t kStrategyBase = 2000000;
}  // namespace lanes

class CounterRng {
 public:
  explicit CounterRng(const StreamKey& key)
      : base_(splitmix64(key.seed ^ splitmix64(key.episode ^ splitmix64(key.round ^
                                                                        splitmix64(key.lane))))) {}

  std::uint64_t next_u64() { return splitmix64(base_ + 0xD1B54A32D192ED03ULL * ++counter_); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Index drawn from (possibly unnormalised) nonnegative weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    for (std::size_t i = weights.size(); i-- > 0;)
      if (weights[i] > 0.0) return i;
    return 0;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do v = next_u64();
    while (v >= limit);
    return v % n;
  }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace peerlab
