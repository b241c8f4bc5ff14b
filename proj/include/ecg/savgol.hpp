#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "ecg/error.hpp"

namespace ecg {

enum class SavgolErrorKind { kInvalidParameters };
using SavgolError = KindedError<SavgolErrorKind>;

/// Least-squares smoothing weights for one (window, order) pair.
/// rows[t] evaluates the window's fitted polynomial at window position t, so
/// rows[window / 2] is the ordinary centred smoother and the other rows serve
/// the first and last half-window of a signal.
struct SavgolCoefficients {
  std::size_t window = 0;
  std::size_t order = 0;
  std::vector<std::vector<double>> rows;

  std::span<const double> centre() const { return rows[window / 2]; }
};

/// Cached; safe to call from several threads.
std::shared_ptr<const SavgolCoefficients> savgol_coefficients(std::size_t window, std::size_t order);

/// Savitzky-Golay smoothing. Output has the input's length. The edges take
/// the polynomial fitted to the first or last full window, so any polynomial
/// of degree <= polyorder passes through unchanged everywhere.
/// Requires window odd, window > polyorder and samples.size() >= window.
std::vector<double> savitzky_golay(std::span<const double> samples, std::size_t window,
                                   std::size_t polyorder);

}  // namespace ecg
