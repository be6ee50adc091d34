#include <algorithm>
#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "pmode/error.hpp"
#include "pmode/mixture.hpp"
#include "support.hpp"

using namespace pmode;
using test::kLogSqrt2Pi;

namespace {

MixtureDensity::ComponentPtr share(Density d) { return std::make_shared<const Density>(std::move(d)); }

double quad_norm(const MixtureDensity& mix) {
  return boost::math::quadrature::tanh_sinh<double>().integrate(
      [&](double x) {
        const double v[] = {x};
        const double f = std::exp(mixture_log_pdf(mix, v));
        return f * f;
      },
      -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
}

} // namespace

TEST_CASE("mixture validation") {
  CHECK_THROWS_AS(MixtureDensity({0.5, 0.4}, {share(test::normal1(0)), share(test::normal1(1))}), InvalidConfig);
  CHECK_THROWS_AS(MixtureDensity({1.5, -0.5}, {share(test::normal1(0)), share(test::normal1(1))}), InvalidConfig);
  CHECK_THROWS_AS(MixtureDensity({0.5, 0.5}, {share(test::normal1(0)), nullptr}), InvalidConfig);
  const GaussianDensity g2(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  CHECK_THROWS_AS(MixtureDensity({0.5, 0.5}, {share(test::normal1(0)), share(g2)}), ShapeError);
  CHECK_NOTHROW(MixtureDensity({1.0, 0.0}, {share(test::normal1(0)), nullptr}));
}

TEST_CASE("mixture log pdf") {
  const double x0[] = {0.0};
  const MixtureDensity solo({1.0, 0.0}, {share(test::normal1(0)), nullptr});
  CHECK(mixture_log_pdf(solo, x0) == doctest::Approx(-kLogSqrt2Pi).epsilon(1e-15));

  const MixtureDensity twins({0.5, 0.5}, {share(test::normal1(0)), share(test::normal1(0))});
  CHECK(mixture_log_pdf(twins, x0) == doctest::Approx(-kLogSqrt2Pi).epsilon(1e-15));

  const MixtureDensity apart({0.5, 0.5}, {share(test::normal1(0)), share(test::normal1(20))});
  const double x20[] = {20.0};
  const long double want = std::log(0.5L * test::normal_pdf(20, 0, 1) + 0.5L * test::normal_pdf(20, 20, 1));
  CHECK(std::abs(mixture_log_pdf(apart, x20) - static_cast<double>(want)) < 1e-9);

  const double far[] = {1e4};
  CHECK(std::isfinite(mixture_log_pdf(apart, far)));
  const double bad[] = {0.0, 0.0};
  CHECK_THROWS_AS(mixture_log_pdf(apart, bad), ShapeError);
}

TEST_CASE("component order does not matter") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 2 + rng.index(5);
    std::vector<double> w(k);
    double s = 0;
    for (auto& v : w) s += (v = rng.uniform(0.1, 1.0));
    for (auto& v : w) v /= s;
    double total = 0;
    for (std::size_t j = 0; j + 1 < k; ++j) total += w[j];
    w[k - 1] = 1.0 - total;
    std::vector<MixtureDensity::ComponentPtr> c;
    for (std::size_t j = 0; j < k; ++j) c.push_back(share(test::normal1(rng.normal(0, 5), rng.uniform(0.2, 3))));
    std::vector<double> rw(w.rbegin(), w.rend());
    std::vector<MixtureDensity::ComponentPtr> rc(c.rbegin(), c.rend());
    const MixtureDensity a(w, c), b(rw, rc);
    const double x[] = {rng.normal(0, 6)};
    CHECK(std::abs(mixture_log_pdf(a, x) - mixture_log_pdf(b, x)) <= 1e-12);
  }
}

TEST_CASE("batch evaluation matches pointwise") {
  const auto data = test::random_dataset(40, 3, 5);
  const auto kde = fit_product_kde(data.subset(std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  const auto g = fit_gaussian(data);
  const MixtureDensity mix({0.25, 0.75}, {share(kde), share(g)});
  const auto batch = mixture_log_pdf_batch(mix, data);
  // The gaussian batch path uses a triangular solve, so only rounding-level agreement.
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double direct = mixture_log_pdf(mix, data.row(i));
    CHECK(std::abs(batch[i] - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("exact L2 norm") {
  const double self = 1.0 / (2.0 * std::sqrt(std::numbers::pi));
  CHECK(exact_l2_norm_sq(MixtureDensity::single(test::normal1(0))) == doctest::Approx(self).epsilon(1e-14));
  const MixtureDensity twins({0.5, 0.5}, {share(test::normal1(0)), share(test::normal1(0))});
  CHECK(exact_l2_norm_sq(twins) == doctest::Approx(self).epsilon(1e-14));
  const MixtureDensity pair({0.5, 0.5}, {share(test::normal1(0)), share(test::normal1(3))});
  CHECK(exact_l2_norm_sq(pair) == doctest::Approx(0.15591).epsilon(1e-4));
  CHECK(exact_l2_norm_sq(pair) == doctest::Approx(quad_norm(pair)).epsilon(1e-10));

  const MixtureDensity mixed({0.5, 0.5}, {share(test::normal1(0)), share(ProductKde(1, 1, {0.0}, {1.0}))});
  CHECK_THROWS_AS(exact_l2_norm_sq(mixed), NoClosedForm);
}

TEST_CASE("L2 norm against Monte Carlo in a few dimensions") {
  // E_f[f(X)] = ||f||^2; compare within three standard errors.
  Rng rng(21);
  for (std::size_t d = 2; d <= 5; ++d) {
    const auto data = test::random_dataset(20, d, 50 + d);
    const auto a = fit_product_kde(data.subset(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
    const auto b = fit_product_kde(data.subset(std::vector<std::size_t>{7, 8, 9, 10, 11, 12, 13, 14, 15}));
    const MixtureDensity mix({0.4, 0.6}, {share(a), share(b)});
    const std::size_t n = 200000;
    double sum = 0, sq = 0;
    std::vector<double> x(d);
    for (std::size_t s = 0; s < n; ++s) {
      // Coordinates of a product component are independent draws from its marginals.
      const ProductKde& src = rng.uniform() < 0.4 ? a : b;
      for (std::size_t j = 0; j < d; ++j)
        x[j] = src.centers(j)[rng.index(src.count())] + src.bandwidth(j) * rng.normal();
      const double f = std::exp(mixture_log_pdf(mix, x));
      sum += f;
      sq += f * f;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    CHECK(std::abs(exact_l2_norm_sq(mix) - mean) <= 3 * se);
  }
}
