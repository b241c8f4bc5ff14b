#pragma once

// Annotated synthetic ECG. Each beat is five Gaussian bumps (P, Q, R, S, T)
// placed around an R-peak that sits exactly on a sample; the annotation is
// that sample. P and T offsets scale with sqrt(IBI) as a QT-like rate
// correction. Gaussian noise, sinusoidal baseline wander and uniform burst
// artifacts are added before rounding and clipping to [0, adc_max].

#include <cstdint>
#include <vector>

#include "ecg/error.hpp"
#include "ecg/recording.hpp"

namespace ecg {

struct BurstArtifact {
  double start_s = 0.0;
  double duration_s = 0.0;
  double amplitude = 0.0;  // half-width of the uniform noise, ADC units
};

struct SyntheticEcgSpec {
  double sample_rate_hz = 250.0;
  double duration_s = 60.0;
  double mean_hr_bpm = 70.0;
  double hr_jitter_pct = 0.0;  // per-beat IBI jitter as a fraction, uniform +-
  double noise_std = 0.0;      // ADC units
  double baseline_wander_amp = 0.0;
  double baseline_wander_hz = 0.3;
  std::vector<BurstArtifact> burst_artifacts;
  std::uint64_t seed = 1;

  double baseline = 400.0;     // isoelectric level, ADC units
  double r_amplitude = 350.0;  // R-bump height, ADC units
  std::int32_t adc_max = 1023;
};

enum class SynthErrorKind { kInvalidSpec };
using SynthError = KindedError<SynthErrorKind>;

void validate(const SyntheticEcgSpec& spec);

/// One template component: offset from R (seconds, before rate scaling for
/// P and T), amplitude relative to R, Gaussian width in seconds.
struct WaveComponent {
  double offset_s;
  double rel_amplitude;
  double sigma_s;
  bool rate_scaled;
};

inline constexpr WaveComponent kBeatTemplate[5] = {
    {-0.200, 0.15, 0.025, true},   // P
    {-0.035, -0.12, 0.008, false},  // Q
    {0.000, 1.00, 0.010, false},    // R
    {0.035, -0.25, 0.008, false},   // S
    {0.250, 0.30, 0.040, true},     // T
};

/// Beats whose R-peak lands later than this before the end are not emitted.
inline constexpr double kTailMarginS = 0.3;

Recording generate(const SyntheticEcgSpec& spec);

}  // namespace ecg
