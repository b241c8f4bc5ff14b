#include <cmath>
#include <random>
#include <thread>

#include "doctest.h"
#include "ecg/savgol.hpp"

using namespace ecg;

namespace {

double poly(const std::vector<double>& c, double x) {
  double y = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) y = y * x + c[k];
  return y;
}

}  // namespace

TEST_CASE("classic 5-point quadratic weights") {
  const auto c = savgol_coefficients(5, 2);
  const double expected[] = {-3, 12, 17, 12, -3};
  for (int k = 0; k < 5; ++k) CHECK(c->centre()[k] == doctest::Approx(expected[k] / 35.0).epsilon(1e-12));
  const auto c7 = savgol_coefficients(7, 3);  // cubic shares the quadratic's centre weights
  const double e7[] = {-2, 3, 6, 7, 6, 3, -2};
  for (int k = 0; k < 7; ++k) CHECK(c7->centre()[k] == doctest::Approx(e7[k] / 21.0).epsilon(1e-12));
}

TEST_CASE("every row sums to one") {
  for (std::size_t w : {3u, 7u, 15u, 31u}) {
    for (std::size_t o = 0; o < w && o <= 5; ++o) {
      const auto c = savgol_coefficients(w, o);
      REQUIRE(c->rows.size() == w);
      for (const auto& row : c->rows) {
        double s = 0.0;
        for (double v : row) s += v;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("constant input is unchanged") {
  const std::vector<double> x(100, 512.0);
  for (double y : savitzky_golay(x, 15, 3)) CHECK(y == doctest::Approx(512.0).epsilon(1e-12));
}

TEST_CASE("polynomials up to the order pass through unchanged") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (std::size_t order : {0u, 1u, 2u, 3u, 4u}) {
    for (std::size_t window : {order + 1 + (order % 2 == 0 ? 1 : 0), 15ul, 21ul}) {
      if (window % 2 == 0) ++window;
      std::vector<double> c(order + 1);
      for (auto& v : c) v = u(rng);
      std::vector<double> x(200);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = poly(c, (double(i) - 100.0) / 50.0);
      const auto y = savitzky_golay(x, window, order);
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::fabs(y[i] - x[i]) <= 1e-9);
    }
  }
}

TEST_CASE("linearity") {
  std::mt19937 rng(5);
  std::normal_distribution<double> n(0.0, 100.0);
  std::vector<double> x(300), y(300), z(300);
  const double a = 2.5, b = -0.75;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = n(rng);
    y[i] = n(rng);
    z[i] = a * x[i] + b * y[i];
  }
  const auto sx = savitzky_golay(x, 15, 3);
  const auto sy = savitzky_golay(y, 15, 3);
  const auto sz = savitzky_golay(z, 15, 3);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::fabs(sz[i] - (a * sx[i] + b * sy[i])) <= 1e-9);
}

TEST_CASE("noisy sine gets closer to the clean sine") {
  std::mt19937 rng(1234);
  std::normal_distribution<double> n(0.0, 0.3);
  std::vector<double> clean(1000), noisy(1000);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    clean[i] = std::sin(2.0 * M_PI * double(i) / 250.0);
    noisy[i] = clean[i] + n(rng);
  }
  const auto s = savitzky_golay(noisy, 15, 3);
  double vin = 0.0, vout = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    vin += (noisy[i] - clean[i]) * (noisy[i] - clean[i]);
    vout += (s[i] - clean[i]) * (s[i] - clean[i]);
  }
  CHECK(vout < vin);
}

TEST_CASE("parameter checks") {
  const std::vector<double> x(10, 1.0);
  CHECK_THROWS_AS(savitzky_golay(x, 4, 2), SavgolError);
  CHECK_THROWS_AS(savitzky_golay(x, 5, 5), SavgolError);
  CHECK_THROWS_AS(savitzky_golay(x, 11, 2), SavgolError);
  CHECK_THROWS_AS(savgol_coefficients(0, 0), SavgolError);
  CHECK(savitzky_golay(x, 9, 2).size() == 10);
}

TEST_CASE("coefficients are cached and shareable across threads") {
  const auto first = savgol_coefficients(21, 4);
  std::vector<std::shared_ptr<const SavgolCoefficients>> got(4);
  std::vector<std::thread> ts;
  for (std::size_t i = 0; i < got.size(); ++i) ts.emplace_back([&, i] { got[i] = savgol_coefficients(21, 4); });
  for (auto& t : ts) t.join();
  for (const auto& g : got) CHECK(g.get() == first.get());
}
