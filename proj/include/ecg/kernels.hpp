#pragma once

// Block filter kernels behind a runtime-selected table.
//
// Every kernel is defined in "valid" form over a contiguous input and writes
// out.size() outputs. Output i depends on input[i .. i + taps - 1]. SIMD
// variants vectorize across i and accumulate each lane in the same order as
// the scalar reference, so all variants produce bit-identical results.

#include <cstddef>
#include <span>
#include <string_view>

namespace ecg::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;

  // out[i] = in[i + (taps-1)/2] - (sum_{k<taps} in[i+k]) / taps
  // Requires taps odd and in.size() >= out.size() + taps - 1.
  void (*centered_high_pass)(std::span<const double> in, std::size_t taps,
                             std::span<double> out);

  // out[i] = sum_{k<taps} |in[i+k]|
  void (*rectified_sum)(std::span<const double> in, std::size_t taps,
                        std::span<double> out);

  // out[i] = sum_{k<coeffs.size()} coeffs[k] * in[i+k]
  void (*correlate)(std::span<const double> in, std::span<const double> coeffs,
                    std::span<double> out);
};

/// The scalar reference table; always available.
const KernelTable& scalar();

/// Table for a specific ISA, or nullptr when the build or the CPU lacks it.
const KernelTable* table_for(Isa isa);

/// Best table for this CPU. The environment variable ECG_KERNELS=scalar
/// forces the reference path.
const KernelTable& active();

}  // namespace ecg::kernels
