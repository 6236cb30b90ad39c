#include "peerlab/schedule.hpp"

#include <cmath>

#include "peerlab/errors.hpp"

namespace peerlab {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Doubling: return "doubling";
    case ScheduleKind::KnownT: return "known_t";
    case ScheduleKind::Custom: return "custom";
  }
  return "doubling";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "doubling") return ScheduleKind::Doubling;
  if (s == "known_t") return ScheduleKind::KnownT;
  if (s == "custom") return ScheduleKind::Custom;
  throw ConfigError("unknown schedule '" + s + "' (expected doubling, known_t or custom)");
}

EpochSchedule build_schedule(ScheduleKind kind, std::uint64_t tau, std::uint64_t horizon,
                             const std::vector<std::uint64_t>& custom) {
  EpochSchedule s;
  s.kind = kind;
  s.horizon = horizon;

  if (kind == ScheduleKind::Custom) {
    if (custom.size() < 2) throw ConfigError("custom schedule needs at least two boundaries");
    if (custom.front() != tau) throw ConfigError("custom schedule must start at the warm-start length");
    for (std::size_t k = 1; k < custom.size(); ++k)
      if (custom[k] <= custom[k - 1]) throw ConfigError("custom boundaries must be strictly increasing");
    if (custom.back() != horizon) throw ConfigError("custom schedule must end at the horizon");
    if (horizon <= tau) throw DegenerateHorizon("horizon does not exceed the warm start");
    s.boundaries = custom;
    return s;
  }

  if (tau < 1) throw InputError("warm-start length must be at least one round");
  if (horizon <= tau)
    throw DegenerateHorizon("horizon " + std::to_string(horizon) +
                            " does not exceed the warm start " + std::to_string(tau));
  s.boundaries.push_back(tau);
  const double T = static_cast<double>(horizon);
  for (std::size_t k = 1; s.boundaries.back() < horizon; ++k) {
    double step;
    if (kind == ScheduleKind::Doubling)
      step = std::ldexp(static_cast<double>(tau), static_cast<int>(k - 1));
    else
      step = std::ceil(std::pow(T, 1.0 - std::ldexp(1.0, -static_cast<int>(k - 1))) *
                       static_cast<double>(tau));
    const double next = static_cast<double>(s.boundaries.back()) + step;
    s.boundaries.push_back(next >= T ? horizon : static_cast<std::uint64_t>(next));
  }
  return s;
}

}  // namespace peerlab
