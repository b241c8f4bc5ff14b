#include <immintrin.h>

#include <cmath>

#include "kernels_internal.hpp"

namespace ecg::kernels::detail {
namespace {

constexpr std::size_t kLanes = 4;

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

void centered_high_pass(std::span<const double> in, std::size_t taps,
                        std::span<double> out) {
  const std::size_t center = (taps - 1) / 2;
  const double denom = static_cast<double>(taps);
  const __m256d vdenom = _mm256_set1_pd(denom);
  const double* src = in.data();
  std::size_t i = 0;
  for (; i + kLanes <= out.size(); i += kLanes) {
    __m256d sum = _mm256_setzero_pd();
    for (std::size_t k = 0; k < taps; ++k)
      sum = _mm256_add_pd(sum, _mm256_loadu_pd(src + i + k));
    const __m256d mid = _mm256_loadu_pd(src + i + center);
    _mm256_storeu_pd(out.data() + i, _mm256_sub_pd(mid, _mm256_div_pd(sum, vdenom)));
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
    __m256d sum = _mm256_setzero_pd();
    for (std::size_t k = 0; k < taps; ++k)
      sum = _mm256_add_pd(sum, abs_pd(_mm256_loadu_pd(src + i + k)));
    _mm256_storeu_pd(out.data() + i, sum);
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
    __m256d sum = _mm256_setzero_pd();
    for (std::size_t k = 0; k < taps; ++k) {
      const __m256d c = _mm256_set1_pd(coeffs[k]);
      sum = _mm256_add_pd(sum, _mm256_mul_pd(c, _mm256_loadu_pd(src + i + k)));
    }
    _mm256_storeu_pd(out.data() + i, sum);
  }
  for (; i < out.size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < taps; ++k) sum += coeffs[k] * src[i + k];
    out[i] = sum;
  }
}

}  // namespace

const KernelTable kAvx2Table{Isa::kAvx2, &centered_high_pass, &rectified_sum,
                             &correlate};

}  // namespace ecg::kernels::detail
