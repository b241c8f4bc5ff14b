#include "ecg/scheduler.hpp"

#include <algorithm>
#include <cmath>

namespace ecg {

void validate_mode(const FeedbackMode& mode) {
  if (const auto* s = std::get_if<ScaledMode>(&mode); s && !(s->factor > 0.0 && std::isfinite(s->factor))) {
    throw SchedulerError(SchedulerErrorKind::kInvalidMode, "scaled factor must be > 0");
  }
  if (const auto* d = std::get_if<DelayedMode>(&mode); d && !(d->delay_ms >= 0.0 && std::isfinite(d->delay_ms))) {
    throw SchedulerError(SchedulerErrorKind::kInvalidMode, "delay must be >= 0 ms");
  }
}

BeatScheduler::BeatScheduler(FeedbackMode mode) : mode_(mode) { validate_mode(mode_); }

std::vector<ToneEvent> BeatScheduler::on_beat(const BeatEvent& beat) {
  std::vector<ToneEvent> scheduled;
  if (std::holds_alternative<SyncMode>(mode_)) {
    scheduled.push_back({beat.peak_timestamp_ms, beat.seq, mode_});
  } else if (const auto* d = std::get_if<DelayedMode>(&mode_)) {
    scheduled.push_back({beat.peak_timestamp_ms + d->delay_ms, beat.seq, mode_});
  } else {
    const auto& scaled = std::get<ScaledMode>(mode_);
    if (!beat.ibi_ms) return scheduled;
    chain_ibi_ms_ = *beat.ibi_ms;
    // Until a tone has played, the chain starts at the interval's first beat.
    const double anchor = last_tone_ms_.value_or(beat.peak_timestamp_ms - chain_ibi_ms_);
    const double due = std::max(beat.peak_timestamp_ms, anchor + scaled.factor * chain_ibi_ms_);
    chain_ = ToneEvent{due, beat.seq, mode_};
    scheduled.push_back(*chain_);
    return scheduled;
  }
  for (const auto& t : scheduled) queue_.emplace(t, insert_counter_++);
  return scheduled;
}

std::optional<ToneEvent> BeatScheduler::next_due(double now_ms) {
  const bool queue_ready = !queue_.empty() && queue_.top().first.due_at_ms <= now_ms;
  const bool chain_ready = chain_ && chain_->due_at_ms <= now_ms;
  if (!queue_ready && !chain_ready) return std::nullopt;

  if (queue_ready && (!chain_ready || queue_.top().first.due_at_ms <= chain_->due_at_ms)) {
    ToneEvent t = queue_.top().first;
    queue_.pop();
    return t;
  }

  ToneEvent t = *chain_;
  last_tone_ms_ = t.due_at_ms;
  const double factor = std::get<ScaledMode>(mode_).factor;
  chain_ = ToneEvent{t.due_at_ms + factor * chain_ibi_ms_, t.source_beat_seq, mode_};
  return t;
}

}  // namespace ecg
