#include "ecg/savgol.hpp"

#include <Eigen/Dense>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "ecg/kernels.hpp"

namespace ecg {
namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw SavgolError(SavgolErrorKind::kInvalidParameters, "savitzky-golay: " + what);
}

void check_params(std::size_t window, std::size_t order) {
  if (window % 2 == 0) invalid("window must be odd, got " + std::to_string(window));
  if (window <= order) invalid("window must exceed polyorder");
}

std::shared_ptr<const SavgolCoefficients> compute(std::size_t window, std::size_t order) {
  const auto w = static_cast<Eigen::Index>(window);
  const auto p = static_cast<Eigen::Index>(order) + 1;
  const double half = static_cast<double>(window / 2);
  const double scale = half > 0.0 ? half : 1.0;

  // Scaled abscissa in [-1, 1] keeps the Vandermonde matrix well conditioned.
  Eigen::MatrixXd vander(w, p);
  for (Eigen::Index j = 0; j < w; ++j) {
    const double u = (static_cast<double>(j) - half) / scale;
    double pw = 1.0;
    for (Eigen::Index k = 0; k < p; ++k) {
      vander(j, k) = pw;
      pw *= u;
    }
  }
  const Eigen::MatrixXd pinv = vander.householderQr().solve(Eigen::MatrixXd::Identity(w, w));

  auto out = std::make_shared<SavgolCoefficients>();
  out->window = window;
  out->order = order;
  out->rows.resize(window);
  for (Eigen::Index t = 0; t < w; ++t) {
    const Eigen::RowVectorXd row = vander.row(t) * pinv;
    out->rows[static_cast<std::size_t>(t)].assign(row.data(), row.data() + w);
  }
  return out;
}

}  // namespace

std::shared_ptr<const SavgolCoefficients> savgol_coefficients(std::size_t window, std::size_t order) {
  check_params(window, order);
  static std::mutex mu;
  static std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const SavgolCoefficients>> cache;
  const std::lock_guard lock(mu);
  auto& slot = cache[{window, order}];
  if (!slot) slot = compute(window, order);
  return slot;
}

std::vector<double> savitzky_golay(std::span<const double> samples, std::size_t window,
                                   std::size_t polyorder) {
  check_params(window, polyorder);
  const std::size_t n = samples.size();
  if (n < window) {
    invalid("need at least window=" + std::to_string(window) + " samples, got " + std::to_string(n));
  }
  const auto coeffs = savgol_coefficients(window, polyorder);
  const std::size_t h = window / 2;

  std::vector<double> out(n);
  kernels::active().correlate(samples, coeffs->centre(), std::span<double>(out.data() + h, n - window + 1));

  const auto& scalar = kernels::scalar();
  const auto head = samples.first(window);
  const auto tail = samples.last(window);
  for (std::size_t t = 0; t < h; ++t) {
    scalar.correlate(head, coeffs->rows[t], {&out[t], 1});
    scalar.correlate(tail, coeffs->rows[window - h + t], {&out[n - h + t], 1});
  }
  return out;
}

}  // namespace ecg
