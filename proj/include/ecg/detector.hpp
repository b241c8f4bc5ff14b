#pragma once

// Streaming R-peak detector: centered moving-average high-pass, rectified
// moving-sum envelope, adaptive window threshold with refractory hold-off.
//
// hp[n]  = x[n - (M-1)/2] - (1/M) * sum_{k<M} x[n-k]      (0 until M samples)
// env[n] = sum_{k<N} |hp[n-k]|                            (missing hp = 0)
// theta  <- alpha * gamma * window_peak + (1 - alpha) * theta   every win_size
//
// A beat is the envelope argmax of a region where env > theta, reported when
// the region closes, shifted back by the group delay D = (M + N - 1) / 2.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ecg/error.hpp"
#include "ecg/types.hpp"

namespace ecg {

enum class DetectorErrorKind {
  kInvalidConfig,
  kSampleGap,
  kValueOutOfRange,
  kCalibrationTooShort,
};

using DetectorError = KindedError<DetectorErrorKind>;

struct DetectorConfig {
  double sample_rate_hz = 250.0;
  std::size_t hp_length = 25;  // M, odd
  std::size_t lp_length = 30;  // N
  std::size_t win_size = 250;
  double alpha = 0.75;  // forgetting factor
  double gamma = 0.5;   // fraction of the window peak
  double refractory_ms = 200.0;
  std::int32_t adc_max = 1023;

  /// Throws DetectorError(kInvalidConfig) naming the first violated bound.
  void validate() const;

  /// Combined filter delay in whole samples, rounded half up.
  std::size_t group_delay() const noexcept { return (hp_length + lp_length - 1) / 2; }

  /// Shortest calibration stream train() accepts.
  std::size_t min_calibration_length() const noexcept {
    return win_size + hp_length + lp_length;
  }
};

/// Fixed-length window over the most recent values, readable as one
/// contiguous span (oldest first). Backed by a mirrored ring.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t length);

  void push(double v) noexcept;
  void clear() noexcept;
  std::span<const double> view() const noexcept { return {buf_.data() + pos_, length_}; }
  std::size_t length() const noexcept { return length_; }

 private:
  std::size_t length_;
  std::size_t pos_ = 0;
  std::vector<double> buf_;
};

/// Running buffers and adaptive-threshold state of one detector.
struct FilterState {
  explicit FilterState(const DetectorConfig& cfg);

  SlidingWindow hp_buffer;  // last M raw values
  SlidingWindow lp_buffer;  // last N high-pass values
  std::uint64_t samples_seen = 0;

  double threshold = 0.0;
  double window_peak = 0.0;
  std::size_t window_pos = 0;
  std::optional<SampleIndex> last_beat_index;
  bool trained = false;
  bool armed = false;  // detections enabled (trained, or first live window done)

  // open above-threshold region
  bool in_region = false;
  double region_peak = 0.0;
  SampleIndex region_peak_index = 0;       // already delay-compensated
  double region_peak_timestamp_ms = 0.0;
  double last_beat_timestamp_ms = 0.0;
  std::uint64_t next_seq = 0;

  // timestamps of the last D+1 samples, for delay-compensated lookup
  std::vector<double> recent_timestamps;
  std::size_t recent_pos = 0;
  std::uint64_t timestamps_seen = 0;
};

// Single steps. Each advances its own part of the state by one sample.
double high_pass_step(FilterState& state, const DetectorConfig& cfg, const RawSample& x);
double low_pass_step(FilterState& state, const DetectorConfig& cfg, double hp_out);
std::optional<BeatEvent> threshold_step(FilterState& state, const DetectorConfig& cfg,
                                        double envelope, const RawSample& sample);

struct StepOutput {
  double hp_out = 0.0;
  double envelope = 0.0;
  std::optional<BeatEvent> beat;

  friend bool operator==(const StepOutput&, const StepOutput&) = default;
};

struct TrainingResult {
  double threshold = 0.0;
  std::size_t windows = 0;
  bool degenerate = false;  // flat calibration: theta == 0, detector left untrained
};

class Detector {
 public:
  explicit Detector(DetectorConfig cfg = {});

  /// high_pass_step -> low_pass_step -> threshold_step on one sample.
  /// The first sample of a stream may carry any index; after that each index
  /// must be the previous one plus one.
  StepOutput process_sample(const RawSample& x);

  /// Same result as calling process_sample on each element, with the filter
  /// stages evaluated by the active SIMD kernels. The whole block is checked
  /// before any state changes.
  std::vector<StepOutput> process_block(std::span<const RawSample> block);

  /// Primes the filters on a calibration stream and seeds theta from the
  /// median window peak. Emits no beats. Restarts from fresh filter state, so
  /// training twice on the same stream yields the same threshold. The stream
  /// continues afterwards; call reset_stream() before feeding a different one.
  TrainingResult train(std::span<const RawSample> calibration);

  /// Starts a new stream: clears filter buffers, region and beat numbering but
  /// keeps the learned threshold and trained flag.
  void reset_stream();

  const DetectorConfig& config() const noexcept { return cfg_; }
  const FilterState& state() const noexcept { return state_; }
  bool calibration_degenerate() const noexcept { return degenerate_; }

 private:
  void check_sample(const RawSample& x, std::optional<SampleIndex> expected) const;

  DetectorConfig cfg_;
  FilterState state_;
  std::optional<SampleIndex> expected_index_;
  bool degenerate_ = false;
};

}  // namespace ecg
