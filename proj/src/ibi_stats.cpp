#include "ecg/ibi_stats.hpp"

#include <cmath>
#include <string>

namespace ecg {

IbiStats ibi_stats(std::span<const BeatEvent> beats) {
  if (beats.size() < 2) {
    throw StatsError(StatsErrorKind::kInsufficientData,
                     "ibi statistics need at least 2 beats, got " + std::to_string(beats.size()));
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& b : beats) {
    if (!b.ibi_ms) continue;
    sum += *b.ibi_ms;
    ++n;
  }
  if (n == 0) {
    throw StatsError(StatsErrorKind::kInsufficientData, "no beat carries an interbeat interval");
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& b : beats) {
    if (!b.ibi_ms) continue;
    const double d = *b.ibi_ms - mean;
    ss += d * d;
  }
  IbiStats out;
  out.mean_ibi_ms = mean;
  out.mean_hr_bpm = 60000.0 / mean;
  out.sdnn_ms = std::sqrt(ss / static_cast<double>(n));
  out.count = beats.size();
  return out;
}

}  // namespace ecg
