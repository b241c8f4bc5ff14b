#include <cassert>
#include <cmath>

#include "kernels_internal.hpp"

namespace ecg::kernels::detail {
namespace {

void centered_high_pass(std::span<const double> in, std::size_t taps,
                        std::span<double> out) {
  assert(taps % 2 == 1 && in.size() + 1 >= out.size() + taps);
  const std::size_t center = (taps - 1) / 2;
  const double denom = static_cast<double>(taps);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < taps; ++k) sum += in[i + k];
    out[i] = in[i + center] - sum / denom;
  }
}

void rectified_sum(std::span<const double> in, std::size_t taps,
                   std::span<double> out) {
  assert(in.size() + 1 >= out.size() + taps);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < taps; ++k) sum += std::fabs(in[i + k]);
    out[i] = sum;
  }
}

void correlate(std::span<const double> in, std::span<const double> coeffs,
               std::span<double> out) {
  assert(in.size() + 1 >= out.size() + coeffs.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) sum += coeffs[k] * in[i + k];
    out[i] = sum;
  }
}

}  // namespace

const KernelTable kScalarTable{Isa::kScalar, &centered_high_pass,
                               &rectified_sum, &correlate};

}  // namespace ecg::kernels::detail
