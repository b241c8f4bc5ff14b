#include "ecg/detector.hpp"

#include <algorithm>
#include <string>

#include "ecg/kernels.hpp"

namespace ecg {
namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw DetectorError(DetectorErrorKind::kInvalidConfig, "invalid detector config: " + what);
}

double oldest_recent_timestamp(const FilterState& s) {
  const std::size_t cap = s.recent_timestamps.size();
  if (s.timestamps_seen < cap) return s.recent_timestamps[0];
  return s.recent_timestamps[s.recent_pos];
}

void note_timestamp(FilterState& s, double timestamp_ms) {
  s.recent_timestamps[s.recent_pos] = timestamp_ms;
  s.recent_pos = (s.recent_pos + 1) % s.recent_timestamps.size();
  ++s.timestamps_seen;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void DetectorConfig::validate() const {
  if (!(sample_rate_hz > 0.0)) config_error("sample_rate_hz must be > 0");
  if (hp_length < 3 || hp_length % 2 == 0) config_error("M must be odd and >= 3");
  if (lp_length < 1) config_error("N must be >= 1");
  if (win_size < lp_length) config_error("win_size must be >= N");
  if (!(alpha > 0.0 && alpha < 1.0)) config_error("alpha must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma < 1.0)) config_error("gamma must lie in (0, 1)");
  if (!(refractory_ms >= 100.0)) config_error("refractory_ms must be >= 100");
  if (adc_max <= 0) config_error("adc_max must be > 0");
}

SlidingWindow::SlidingWindow(std::size_t length) : length_(length), buf_(2 * length, 0.0) {}

void SlidingWindow::push(double v) noexcept {
  buf_[pos_] = v;
  buf_[pos_ + length_] = v;
  pos_ = pos_ + 1 == length_ ? 0 : pos_ + 1;
}

void SlidingWindow::clear() noexcept {
  std::fill(buf_.begin(), buf_.end(), 0.0);
  pos_ = 0;
}

FilterState::FilterState(const DetectorConfig& cfg)
    : hp_buffer(cfg.hp_length),
      lp_buffer(cfg.lp_length),
      recent_timestamps(cfg.group_delay() + 1, 0.0) {}

double high_pass_step(FilterState& state, const DetectorConfig& cfg, const RawSample& x) {
  state.hp_buffer.push(static_cast<double>(x.value));
  ++state.samples_seen;

  if (state.samples_seen < cfg.hp_length) return 0.0;
  double out = 0.0;
  kernels::scalar().centered_high_pass(state.hp_buffer.view(), cfg.hp_length, {&out, 1});
  return out;
}

double low_pass_step(FilterState& state, const DetectorConfig& cfg, double hp_out) {
  state.lp_buffer.push(hp_out);
  double out = 0.0;
  kernels::scalar().rectified_sum(state.lp_buffer.view(), cfg.lp_length, {&out, 1});
  return out;
}

std::optional<BeatEvent> threshold_step(FilterState& s, const DetectorConfig& cfg,
                                        double envelope, const RawSample& sample) {
  std::optional<BeatEvent> beat;
  const std::size_t delay = cfg.group_delay();

  note_timestamp(s, sample.timestamp_ms);

  if (s.armed) {
    if (envelope > s.threshold) {
      if (!s.in_region || envelope > s.region_peak) {
        s.in_region = true;
        s.region_peak = envelope;
        s.region_peak_index =
            sample.index - std::min<std::uint64_t>(delay, s.timestamps_seen - 1);
        s.region_peak_timestamp_ms = oldest_recent_timestamp(s);
      }
    } else if (s.in_region) {
      s.in_region = false;
      const double peak_ts = s.region_peak_timestamp_ms;
      const bool clear_of_refractory =
          !s.last_beat_index || peak_ts - s.last_beat_timestamp_ms >= cfg.refractory_ms;
      if (clear_of_refractory) {
        BeatEvent ev;
        ev.seq = s.next_seq++;
        ev.peak_index = s.region_peak_index;
        ev.peak_timestamp_ms = peak_ts;
        if (s.last_beat_index) ev.ibi_ms = peak_ts - s.last_beat_timestamp_ms;
        s.last_beat_index = ev.peak_index;
        s.last_beat_timestamp_ms = peak_ts;
        beat = ev;
      }
    }
  }

  s.window_peak = std::max(s.window_peak, envelope);
  if (++s.window_pos == cfg.win_size) {
    s.threshold = cfg.alpha * cfg.gamma * s.window_peak + (1.0 - cfg.alpha) * s.threshold;
    s.window_peak = 0.0;
    s.window_pos = 0;
    s.armed = true;
  }
  return beat;
}

Detector::Detector(DetectorConfig cfg) : cfg_(cfg), state_((cfg_.validate(), cfg_)) {}

void Detector::check_sample(const RawSample& x, std::optional<SampleIndex> expected) const {
  if (expected && x.index != *expected) {
    throw DetectorError(DetectorErrorKind::kSampleGap,
                        "sample index " + std::to_string(x.index) + " where " +
                            std::to_string(*expected) + " was expected");
  }
  if (x.value < 0 || x.value > cfg_.adc_max) {
    throw DetectorError(DetectorErrorKind::kValueOutOfRange,
                        "sample " + std::to_string(x.index) + " value " +
                            std::to_string(x.value) + " outside [0, " +
                            std::to_string(cfg_.adc_max) + "]");
  }
}

StepOutput Detector::process_sample(const RawSample& x) {
  check_sample(x, expected_index_);
  expected_index_ = x.index + 1;
  StepOutput out;
  out.hp_out = high_pass_step(state_, cfg_, x);
  out.envelope = low_pass_step(state_, cfg_, out.hp_out);
  out.beat = threshold_step(state_, cfg_, out.envelope, x);
  return out;
}

std::vector<StepOutput> Detector::process_block(std::span<const RawSample> block) {
  std::optional<SampleIndex> expected = expected_index_;
  for (const auto& x : block) {
    check_sample(x, expected);
    expected = x.index + 1;
  }
  if (block.empty()) return {};

  const std::size_t n = block.size();
  const std::size_t m = cfg_.hp_length;
  const std::size_t nl = cfg_.lp_length;
  const auto& k = kernels::active();

  std::vector<double> raw;
  raw.reserve(m - 1 + n);
  const auto hp_hist = state_.hp_buffer.view();
  raw.insert(raw.end(), hp_hist.begin() + 1, hp_hist.end());
  for (const auto& x : block) raw.push_back(static_cast<double>(x.value));

  std::vector<double> hp(nl - 1 + n);
  const auto lp_hist = state_.lp_buffer.view();
  std::copy(lp_hist.begin() + 1, lp_hist.end(), hp.begin());
  const std::span<double> hp_block(hp.data() + nl - 1, n);
  k.centered_high_pass(raw, m, hp_block);
  for (std::size_t i = 0; i < n; ++i) {
    if (state_.samples_seen + i + 1 < m) hp_block[i] = 0.0;
  }

  std::vector<double> env(n);
  k.rectified_sum(hp, nl, env);

  std::vector<StepOutput> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const RawSample& x = block[i];
    state_.hp_buffer.push(raw[m - 1 + i]);
    ++state_.samples_seen;
    state_.lp_buffer.push(hp_block[i]);
    out[i].hp_out = hp_block[i];
    out[i].envelope = env[i];
    out[i].beat = threshold_step(state_, cfg_, env[i], x);
  }
  expected_index_ = expected;
  return out;
}

TrainingResult Detector::train(std::span<const RawSample> calibration) {
  const std::size_t min_len = cfg_.min_calibration_length();
  if (calibration.size() < min_len) {
    throw DetectorError(DetectorErrorKind::kCalibrationTooShort,
                        "calibration stream has " + std::to_string(calibration.size()) +
                            " samples; at least " + std::to_string(min_len) +
                            " (win_size + M + N) are required");
  }

  state_ = FilterState(cfg_);
  expected_index_.reset();
  degenerate_ = false;

  const std::size_t warmup = cfg_.hp_length + cfg_.lp_length;
  std::vector<double> peaks;
  double peak = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < calibration.size(); ++i) {
    const RawSample& x = calibration[i];
    check_sample(x, expected_index_);
    expected_index_ = x.index + 1;
    const double hp = high_pass_step(state_, cfg_, x);
    const double env = low_pass_step(state_, cfg_, hp);
    note_timestamp(state_, x.timestamp_ms);
    if (i < warmup) continue;
    peak = std::max(peak, env);
    if (++pos == cfg_.win_size) {
      peaks.push_back(peak);
      peak = 0.0;
      pos = 0;
    }
  }

  TrainingResult result;
  result.windows = peaks.size();
  state_.threshold = cfg_.gamma * median_of(peaks);
  result.threshold = state_.threshold;
  state_.window_peak = 0.0;
  state_.window_pos = 0;
  if (state_.threshold > 0.0) {
    state_.trained = true;
    state_.armed = true;
  } else {
    degenerate_ = true;
    result.degenerate = true;
  }
  return result;
}

void Detector::reset_stream() {
  const double threshold = state_.threshold;
  const bool trained = state_.trained;
  state_ = FilterState(cfg_);
  state_.threshold = threshold;
  state_.trained = trained;
  state_.armed = trained;
  expected_index_.reset();
}

}  // namespace ecg
