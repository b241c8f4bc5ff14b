#pragma once

#include <cstdint>
#include <optional>

namespace ecg {

using SampleIndex = std::uint64_t;

/// One timestamped ADC reading.
struct RawSample {
  SampleIndex index = 0;
  double timestamp_ms = 0.0;  // since session start, carried from ingest
  std::int32_t value = 0;     // ADC code in [0, adc_max]

  friend bool operator==(const RawSample&, const RawSample&) = default;
};

/// A detected R-peak. peak_index and peak_timestamp_ms are already
/// compensated for the filter group delay.
struct BeatEvent {
  std::uint64_t seq = 0;
  SampleIndex peak_index = 0;
  double peak_timestamp_ms = 0.0;
  std::optional<double> ibi_ms;  // absent for the first beat

  friend bool operator==(const BeatEvent&, const BeatEvent&) = default;
};

/// Ground-truth R-peak mark.
struct Annotation {
  SampleIndex beat_index = 0;
  double beat_timestamp_ms = 0.0;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

}  // namespace ecg
