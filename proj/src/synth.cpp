#include "ecg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace ecg {
namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw SynthError(SynthErrorKind::kInvalidSpec, "invalid synthetic ECG spec: " + what);
}

// Independent, reproducible streams for rhythm, noise and bursts.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

void validate(const SyntheticEcgSpec& s) {
  if (!(s.sample_rate_hz > 0.0)) invalid("sample_rate_hz must be > 0");
  if (!(s.duration_s > 0.0)) invalid("duration_s must be > 0");
  if (!(s.mean_hr_bpm >= 30.0 && s.mean_hr_bpm <= 220.0)) invalid("mean_hr_bpm must lie in [30, 220]");
  if (!(s.hr_jitter_pct >= 0.0 && s.hr_jitter_pct <= 0.2)) invalid("hr_jitter_pct must lie in [0, 0.2]");
  if (!(s.noise_std >= 0.0)) invalid("noise_std must be >= 0");
  if (!(s.baseline_wander_amp >= 0.0) || !(s.baseline_wander_hz >= 0.0)) invalid("baseline wander must be >= 0");
  if (s.adc_max <= 0) invalid("adc_max must be > 0");
  if (!(s.baseline >= 0.0 && s.baseline <= s.adc_max)) invalid("baseline must lie in [0, adc_max]");
  if (!(s.r_amplitude > 0.0)) invalid("r_amplitude must be > 0");
  // The clean template must fit; only noise and artifacts may clip.
  double lo = 0.0, hi = 0.0;
  for (const auto& c : kBeatTemplate) {
    lo = std::min(lo, c.rel_amplitude);
    hi = std::max(hi, c.rel_amplitude);
  }
  if (s.baseline + hi * s.r_amplitude > s.adc_max || s.baseline + lo * s.r_amplitude < 0.0) {
    invalid("baseline and r_amplitude put the clean beat outside [0, adc_max]");
  }
  for (const auto& b : s.burst_artifacts) {
    if (!(b.start_s >= 0.0) || !(b.duration_s >= 0.0) || !(b.amplitude >= 0.0)) {
      invalid("burst artifacts need non-negative start, duration and amplitude");
    }
  }
}

Recording generate(const SyntheticEcgSpec& spec) {
  validate(spec);
  const double fs = spec.sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * fs));
  const double mean_ibi_s = 60.0 / spec.mean_hr_bpm;
  const double rate_scale = std::sqrt(mean_ibi_s);

  std::mt19937_64 rhythm_rng(stream_seed(spec.seed, 0));
  std::mt19937_64 noise_rng(stream_seed(spec.seed, 1));
  std::mt19937_64 burst_rng(stream_seed(spec.seed, 2));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  std::vector<std::size_t> peaks;
  for (double t = 0.5 * mean_ibi_s; t <= spec.duration_s - kTailMarginS;) {
    const auto center = static_cast<std::size_t>(std::llround(t * fs));
    if (center < n) peaks.push_back(center);
    t += mean_ibi_s * (1.0 + spec.hr_jitter_pct * unit(rhythm_rng));
  }

  std::vector<double> signal(n, spec.baseline);
  for (const std::size_t center : peaks) {
    for (const auto& c : kBeatTemplate) {
      const double offset = c.offset_s * (c.rate_scaled ? rate_scale : 1.0);
      const double mu = static_cast<double>(center) + offset * fs;  // in samples
      const double sigma = c.sigma_s * fs;
      const double amp = c.rel_amplitude * spec.r_amplitude;
      const auto lo = static_cast<long long>(std::floor(mu - 5.0 * sigma));
      const auto hi = static_cast<long long>(std::ceil(mu + 5.0 * sigma));
      for (long long i = std::max(0LL, lo); i <= hi && i < static_cast<long long>(n); ++i) {
        const double z = (static_cast<double>(i) - mu) / sigma;
        signal[static_cast<std::size_t>(i)] += amp * std::exp(-0.5 * z * z);
      }
    }
  }

  if (spec.baseline_wander_amp > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      signal[i] += spec.baseline_wander_amp * std::sin(2.0 * std::numbers::pi * spec.baseline_wander_hz * t);
    }
  }
  if (spec.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    for (auto& v : signal) v += noise(noise_rng);
  }
  for (const auto& b : spec.burst_artifacts) {
    const auto lo = static_cast<std::size_t>(std::llround(b.start_s * fs));
    const auto hi = std::min(n, static_cast<std::size_t>(std::llround((b.start_s + b.duration_s) * fs)));
    for (std::size_t i = lo; i < hi; ++i) signal[i] += b.amplitude * unit(burst_rng);
  }

  Recording rec;
  rec.sample_rate_hz = fs;
  rec.source = "synthetic(hr=" + std::to_string(spec.mean_hr_bpm) + ", seed=" + std::to_string(spec.seed) + ")";
  rec.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::clamp(std::round(signal[i]), 0.0, static_cast<double>(spec.adc_max));
    rec.samples[i] = RawSample{i, static_cast<double>(i) * 1000.0 / fs, static_cast<std::int32_t>(v)};
  }
  std::vector<Annotation> ann;
  ann.reserve(peaks.size());
  for (const std::size_t p : peaks) ann.push_back({p, static_cast<double>(p) * 1000.0 / fs});
  rec.annotations = std::move(ann);
  return rec;
}

}  // namespace ecg
