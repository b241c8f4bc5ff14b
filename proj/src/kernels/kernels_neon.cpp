#include <arm_neon.h>

#include <cmath>

#include "kernels_internal.hpp"

namespace ecg::kernels::detail {
namespace {

constexpr std::size_t kLanes = 2;

void centered_high_pass(std::span<const double> in, std::size_t taps,
                        std::span<double> out) {
  const std::size_t center = (taps - 1) / 2;
  const double denom = static_cast<double>(taps);
  const float64x2_t vdenom = vdupq_n_f64(denom);
  const double* src = in.data();
  std::size_t i = 0;
  for (; i + kLanes <= out.size(); i += kLanes) {
    float64x2_t sum = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < taps; ++k) sum = vaddq_f64(sum, vld1q_f64(src + i + k));
    const float64x2_t mid = vld1q_f64(src + i + center);
    vst1q_f64(out.data() + i, vsubq_f64(mid, vdivq_f64(sum, vdenom)));
  }
  for (; i < out.size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < taps; ++k) sum += src[i + k];
    out[i] = src[i + center] - sum / denom;
  }
}

void rectified_sum(std::span<const double> in, std::size_t taps,
                   std::span<double> out) {
  const double* src = in.data();
  std::size_t i = 0;
  for (; i + kLanes <= out.size(); i += kLanes) {
    float64x2_t sum = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < taps; ++k)
      sum = vaddq_f64(sum, vabsq_f64(vld1q_f64(src + i + k)));
    vst1q_f64(out.data() + i, sum);
  }
  for (; i < out.size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < taps; ++k) sum += std::fabs(src[i + k]);
    out[i] = sum;
  }
}

void correlate(std::span<const double> in, std::span<const double> coeffs,
               std::span<double> out) {
  const double* src = in.data();
  const std::size_t taps = coeffs.size();
  std::size_t i = 0;
  for (; i + kLanes <= out.size(); i += kLanes) {
    float64x2_t sum = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < taps; ++k) {
      // vmulq + vaddq, not vfmaq: must round like the scalar path.
      const float64x2_t prod = vmulq_f64(vdupq_n_f64(coeffs[k]), vld1q_f64(src + i + k));
      sum = vaddq_f64(sum, prod);
    }
    vst1q_f64(out.data() + i, sum);
  }
  for (; i < out.size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < taps; ++k) sum += coeffs[k] * src[i + k];
    out[i] = sum;
  }
}

}  // namespace

const KernelTable kNeonTable{Isa::kNeon, &centered_high_pass, &rectified_sum,
                             &correlate};

}  // namespace ecg::kernels::detail
