#pragma once

#include <cstddef>
#include <span>

#include "ecg/error.hpp"
#include "ecg/types.hpp"

namespace ecg {

enum class StatsErrorKind { kInsufficientData };
using StatsError = KindedError<StatsErrorKind>;

struct IbiStats {
  double mean_hr_bpm = 0.0;
  double mean_ibi_ms = 0.0;
  double sdnn_ms = 0.0;  // population standard deviation (divides by n)
  std::size_t count = 0;  // beats, not intervals
};

/// Interbeat-interval summary over the beats that carry an ibi_ms.
/// Throws StatsError when fewer than two beats (or no interval) are given.
IbiStats ibi_stats(std::span<const BeatEvent> beats);

}  // namespace ecg
