#include <cmath>
#include <vector>

#include "doctest.h"
#include "ecg/ibi_stats.hpp"
#include "ecg/synth.hpp"
#include "test_support.hpp"

using namespace ecg;

namespace {

std::vector<BeatEvent> beats_with_ibis(const std::vector<double>& ibis) {
  std::vector<BeatEvent> out;
  double t = 500.0;
  out.push_back({0, 0, t, std::nullopt});
  for (std::size_t i = 0; i < ibis.size(); ++i) {
    t += ibis[i];
    out.push_back({i + 1, 0, t, ibis[i]});
  }
  return out;
}

}  // namespace

TEST_CASE("constant 800 ms intervals") {
  const auto s = ibi_stats(beats_with_ibis(std::vector<double>(20, 800.0)));
  CHECK(s.mean_hr_bpm == doctest::Approx(75.0));
  CHECK(s.mean_ibi_ms == doctest::Approx(800.0));
  CHECK(s.sdnn_ms == doctest::Approx(0.0));
  CHECK(s.count == 21);
}

TEST_CASE("two intervals 750 and 850") {
  const auto s = ibi_stats(beats_with_ibis({750.0, 850.0}));
  CHECK(s.mean_ibi_ms == doctest::Approx(800.0));
  CHECK(s.sdnn_ms == doctest::Approx(50.0));
  CHECK(s.count == 3);
}

TEST_CASE("303 s recording averages about 68.7 bpm") {
  const auto rec = generate(testing::clean_spec(68.7, 303));
  REQUIRE(rec.annotations->size() == 347);
  std::vector<BeatEvent> beats;
  std::optional<double> last;
  for (const auto& a : *rec.annotations) {
    std::optional<double> ibi;
    if (last) ibi = a.beat_timestamp_ms - *last;
    beats.push_back({beats.size(), a.beat_index, a.beat_timestamp_ms, ibi});
    last = a.beat_timestamp_ms;
  }
  const auto s = ibi_stats(beats);
  CHECK(s.mean_hr_bpm == doctest::Approx(347.0 / 303.0 * 60.0).epsilon(0.005));
  CHECK(s.count == 347);
}

TEST_CASE("too few beats is an error") {
  auto check_kind = [](const std::vector<BeatEvent>& b) {
    try {
      ibi_stats(b);
      return false;
    } catch (const StatsError& e) {
      return e.kind() == StatsErrorKind::kInsufficientData;
    }
  };
  CHECK(check_kind({}));
  CHECK(check_kind(beats_with_ibis({})));
  CHECK(check_kind({{0, 0, 0.0, std::nullopt}, {1, 0, 10.0, std::nullopt}}));
}
