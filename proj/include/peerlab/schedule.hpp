#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace peerlab {

enum class ScheduleKind { Doubling, KnownT, Custom };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& s);

/// Epoch boundaries τ₀ < τ₁ < … < τ_m = T. Rounds are numbered from 1;
/// rounds 1..τ₀ form the warm start and epoch k covers τ_{k−1}+1 .. τ_k.
struct EpochSchedule {
  ScheduleKind kind = ScheduleKind::Doubling;
  std::uint64_t horizon = 0;
  std::vector<std::uint64_t> boundaries;

  std::uint64_t warm_start() const { return boundaries.front(); }
  std::size_t adaptive_epochs() const { return boundaries.size() - 1; }
  /// Adaptive epochs plus the warm-start phase when it is nonempty.
  std::size_t total_epochs() const { return adaptive_epochs() + (warm_start() > 0 ? 1 : 0); }
  std::uint64_t epoch_start(std::size_t k) const { return boundaries[k - 1] + 1; }
  std::uint64_t epoch_end(std::size_t k) const { return boundaries[k]; }
};

/// Doubling: τ_k = 2^k τ. KnownT: τ_k − τ_{k−1} = ⌈T^{1−2^{−(k−1)}} τ⌉.
/// Both clip the last boundary to T. Custom validates `custom` (strictly
/// increasing, first = τ, last = T) and passes it through.
/// Throws DegenerateHorizon when T <= τ.
EpochSchedule build_schedule(ScheduleKind kind, std::uint64_t tau, std::uint64_t horizon,
                             const std::vector<std::uint64_t>& custom = {});

}  // namespace peerlab
