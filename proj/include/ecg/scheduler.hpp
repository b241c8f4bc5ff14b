#pragma once

// Turns detected beats into feedback tones that run with, ahead of, behind,
// or at a fixed delay from the heartbeat. Time is always injected by the
// caller; the scheduler never reads a clock.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <variant>
#include <vector>

#include "ecg/error.hpp"
#include "ecg/types.hpp"

namespace ecg {

struct SyncMode {
  friend bool operator==(const SyncMode&, const SyncMode&) = default;
};

/// Tones repeat every factor * last IBI (factor < 1 is faster than the heart).
struct ScaledMode {
  double factor = 1.0;
  friend bool operator==(const ScaledMode&, const ScaledMode&) = default;
};

struct DelayedMode {
  double delay_ms = 0.0;
  friend bool operator==(const DelayedMode&, const DelayedMode&) = default;
};

using FeedbackMode = std::variant<SyncMode, ScaledMode, DelayedMode>;

enum class SchedulerErrorKind { kInvalidMode };
using SchedulerError = KindedError<SchedulerErrorKind>;

void validate_mode(const FeedbackMode& mode);

struct ToneEvent {
  double due_at_ms = 0.0;
  std::uint64_t source_beat_seq = 0;
  FeedbackMode mode;

  friend bool operator==(const ToneEvent&, const ToneEvent&) = default;
};

class BeatScheduler {
 public:
  explicit BeatScheduler(FeedbackMode mode = SyncMode{});

  /// Schedules the tone(s) caused by one beat and returns them.
  /// Scaled mode replaces any pending chain tone; the first beat (no IBI)
  /// schedules nothing in that mode.
  std::vector<ToneEvent> on_beat(const BeatEvent& beat);

  /// Removes and returns the earliest tone due at or before now_ms.
  std::optional<ToneEvent> next_due(double now_ms);

  std::size_t pending() const noexcept { return queue_.size() + (chain_ ? 1 : 0); }
  const FeedbackMode& mode() const noexcept { return mode_; }

 private:
  struct Later {
    bool operator()(const std::pair<ToneEvent, std::uint64_t>& a,
                    const std::pair<ToneEvent, std::uint64_t>& b) const {
      if (a.first.due_at_ms != b.first.due_at_ms) return a.first.due_at_ms > b.first.due_at_ms;
      return a.second > b.second;
    }
  };

  FeedbackMode mode_;
  std::priority_queue<std::pair<ToneEvent, std::uint64_t>,
                      std::vector<std::pair<ToneEvent, std::uint64_t>>, Later>
      queue_;
  std::uint64_t insert_counter_ = 0;

  // Scaled mode chain: one pending tone, re-anchored on every beat.
  std::optional<ToneEvent> chain_;
  std::optional<double> last_tone_ms_;
  double chain_ibi_ms_ = 0.0;
};

}  // namespace ecg
