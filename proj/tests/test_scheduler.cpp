#include <cmath>
#include <vector>

#include "doctest.h"
#include "ecg/scheduler.hpp"

using namespace ecg;

namespace {

BeatEvent beat(std::uint64_t seq, double ts, std::optional<double> ibi = std::nullopt) {
  return {seq, 0, ts, ibi};
}

std::vector<BeatEvent> constant_stream(double ibi_ms, double duration_ms) {
  std::vector<BeatEvent> out;
  for (double t = 400.0; t <= duration_ms; t += ibi_ms) {
    out.push_back(beat(out.size(), t, out.empty() ? std::nullopt : std::optional<double>(ibi_ms)));
  }
  return out;
}

/// Feeds beats at their own timestamps and polls every millisecond.
std::vector<ToneEvent> drive(BeatScheduler& s, const std::vector<BeatEvent>& beats, double end_ms) {
  std::vector<ToneEvent> tones;
  std::size_t next = 0;
  for (double now = 0.0; now <= end_ms; now += 1.0) {
    while (next < beats.size() && beats[next].peak_timestamp_ms <= now) s.on_beat(beats[next++]);
    while (auto t = s.next_due(now)) tones.push_back(*t);
  }
  return tones;
}

}  // namespace

TEST_CASE("sync tone sits on the beat") {
  BeatScheduler s(SyncMode{});
  const auto t = s.on_beat(beat(3, 1000.0));
  REQUIRE(t.size() == 1);
  CHECK(t[0].due_at_ms == 1000.0);
  CHECK(t[0].source_beat_seq == 3);
  CHECK(t[0].mode == FeedbackMode{SyncMode{}});
}

TEST_CASE("delayed tone follows by the delay") {
  BeatScheduler s(DelayedMode{250.0});
  const auto t = s.on_beat(beat(0, 1000.0));
  REQUIRE(t.size() == 1);
  CHECK(t[0].due_at_ms == 1250.0);
}

TEST_CASE("scaled chain re-anchors on the last tone") {
  BeatScheduler s(ScaledMode{0.8});
  CHECK(s.on_beat(beat(0, 200.0)).empty());  // no interval yet
  const auto first = s.on_beat(beat(1, 2000.0, 1800.0));  // 200 + 0.8 * 1800 < 2000
  REQUIRE(first.size() == 1);
  CHECK(first[0].due_at_ms == doctest::Approx(2000.0));
  const auto popped = s.next_due(2000.0);
  REQUIRE(popped);
  CHECK(popped->due_at_ms == doctest::Approx(2000.0));
  const auto next = s.on_beat(beat(2, 2100.0, 800.0));
  REQUIRE(next.size() == 1);
  CHECK(next[0].due_at_ms == doctest::Approx(2640.0));
  CHECK(s.pending() == 1);
}

TEST_CASE("scaled tones never precede the beat that scheduled them") {
  BeatScheduler s(ScaledMode{0.5});
  s.on_beat(beat(0, 0.0));
  s.on_beat(beat(1, 1000.0, 1000.0));
  for (double now = 1000.0; now < 3000.0; now += 1.0) s.next_due(now);
  const auto t = s.on_beat(beat(2, 5000.0, 4000.0));
  REQUIRE(t.size() == 1);
  CHECK(t[0].due_at_ms >= 5000.0);
}

TEST_CASE("next_due ordering and boundaries") {
  BeatScheduler empty;
  CHECK_FALSE(empty.next_due(1e9));

  BeatScheduler s(SyncMode{});
  s.on_beat(beat(0, 100.0));
  s.on_beat(beat(1, 50.0));
  auto a = s.next_due(120.0);
  auto b = s.next_due(120.0);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->due_at_ms == 50.0);
  CHECK(b->due_at_ms == 100.0);
  CHECK_FALSE(s.next_due(120.0));

  BeatScheduler edge(SyncMode{});
  edge.on_beat(beat(0, 500.0));
  CHECK_FALSE(edge.next_due(400.0));
  CHECK(edge.next_due(500.0));
}

TEST_CASE("mode validation") {
  CHECK_THROWS_AS(BeatScheduler(ScaledMode{0.0}), SchedulerError);
  CHECK_THROWS_AS(BeatScheduler(ScaledMode{-1.0}), SchedulerError);
  CHECK_THROWS_AS(BeatScheduler(DelayedMode{-5.0}), SchedulerError);
  CHECK_NOTHROW(BeatScheduler(DelayedMode{0.0}));
}

TEST_CASE("tone rates over a constant-interval minute") {
  const auto beats = constant_stream(800.0, 60000.0);
  {
    BeatScheduler s(SyncMode{});
    const auto tones = drive(s, beats, 61000.0);
    REQUIRE(tones.size() == beats.size());
    for (std::size_t i = 0; i < tones.size(); ++i) CHECK(tones[i].due_at_ms == beats[i].peak_timestamp_ms);
  }
  {
    BeatScheduler s(DelayedMode{250.0});
    const auto tones = drive(s, beats, 61000.0);
    REQUIRE(tones.size() == beats.size());
    for (std::size_t i = 0; i < tones.size(); ++i) {
      CHECK(tones[i].due_at_ms - beats[tones[i].source_beat_seq].peak_timestamp_ms == 250.0);
    }
  }
  for (double f : {0.5, 0.8, 1.0, 1.25}) {
    CAPTURE(f);
    BeatScheduler s(ScaledMode{f});
    const auto tones = drive(s, beats, beats.back().peak_timestamp_ms);
    // Oracle: one tone per f * IBI from the second beat to the last.
    const double span = beats.back().peak_timestamp_ms - beats[1].peak_timestamp_ms;
    const double expected = std::floor(span / (f * 800.0)) + (f < 1.0 ? 1.0 : 0.0);
    CHECK(std::fabs(double(tones.size()) - expected) <= 1.0);
    if (f == 0.8) CHECK(std::fabs(double(tones.size()) - double(beats.size()) / f) <= 2.0);
    for (std::size_t i = 1; i < tones.size(); ++i) CHECK(tones[i].due_at_ms >= tones[i - 1].due_at_ms);
  }
}
