#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <chrono>
#include <cmath>
#include <numbers>

#include "pmode/error.hpp"
#include "pmode/estimators.hpp"
#include "support.hpp"

using namespace pmode;
using test::kLogSqrt2Pi;

namespace {

const double kSilverman = std::pow(4.0 / 3.0, 0.2);

double integrate(const std::function<double(double)>& f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-12);
}

} // namespace

TEST_CASE("fit_gaussian") {
  SUBCASE("symmetric pair divides by r") {
    const auto g = fit_gaussian(test::column({-1, 1}));
    CHECK(g.mean()[0] == 0.0);
    CHECK(g.covariance()(0, 0) == doctest::Approx(1.0 + 1e-6).epsilon(1e-15));
  }
  SUBCASE("single sample keeps only the regularizer") {
    const auto g = fit_gaussian(Dataset(1, 3, {1, 2, 3}));
    CHECK(g.mean()[2] == 3.0);
    CHECK(g.covariance().isApprox(1e-6 * Eigen::MatrixXd::Identity(3, 3), 1e-12));
  }
  SUBCASE("large sample recovers the identity") {
    const auto g = fit_gaussian(test::random_dataset(10000, 2, 11));
    CHECK(std::abs(g.mean()[0]) < 0.05);
    CHECK(std::abs(g.mean()[1]) < 0.05);
    CHECK(std::abs(g.covariance()(0, 0) - 1) < 0.05);
    CHECK(std::abs(g.covariance()(1, 1) - 1) < 0.05);
    CHECK(std::abs(g.covariance()(0, 1)) < 0.05);
  }
  SUBCASE("row subset equals fitting the subset") {
    const auto ds = test::random_dataset(40, 3, 4);
    const std::vector<std::size_t> rows{1, 5, 9, 20, 33};
    const auto a = fit_gaussian(ds, rows);
    const auto b = fit_gaussian(ds.subset(rows));
    CHECK(a.mean() == b.mean());
    CHECK(a.covariance() == b.covariance());
  }
  CHECK_THROWS_AS(fit_gaussian(Dataset(0, 2, {})), EmptyBlock);
}

TEST_CASE("gaussian density validation") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(GaussianDensity(Eigen::VectorXd::Zero(2), asym), FitError);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(GaussianDensity(Eigen::VectorXd::Zero(2), indefinite), FitError);
  CHECK_THROWS_AS(GaussianDensity(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(3, 3)), ShapeError);
}

TEST_CASE("gaussian log pdf") {
  const double x0[] = {0.0};
  CHECK(log_pdf(test::normal1(0), x0) == doctest::Approx(-kLogSqrt2Pi).epsilon(1e-14));
  const GaussianDensity g2(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  const double z2[] = {0.0, 0.0};
  CHECK(g2.log_pdf(z2) == doctest::Approx(-std::log(2 * std::numbers::pi)).epsilon(1e-14));
  const double x5[] = {5.0};
  CHECK(log_pdf(test::normal1(3, 4), x5) ==
        doctest::Approx(-0.5 * (std::log(2 * std::numbers::pi) + std::log(4.0) + 1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(g2.log_pdf(x5), ShapeError);

  // Correlated 2-D case against the explicit inverse.
  Eigen::MatrixXd s(2, 2);
  s << 2.0, 0.6, 0.6, 1.0;
  Eigen::VectorXd mu(2);
  mu << 1.0, -1.0;
  const GaussianDensity g(mu, s);
  const double x[] = {0.3, 0.2};
  Eigen::Vector2d dx(0.3 - 1.0, 0.2 + 1.0);
  const double q = dx.dot(s.inverse() * dx);
  CHECK(g.log_pdf(x) ==
        doctest::Approx(-0.5 * (2 * std::log(2 * std::numbers::pi) + std::log(s.determinant()) + q)).epsilon(1e-13));
}

TEST_CASE("silverman bandwidth") {
  std::vector<double> v(32);
  for (std::size_t i = 0; i < 32; ++i) v[i] = i % 2 ? 1.0 : -1.0; // MLE sd = 1
  CHECK(silverman_bandwidth(v) == doctest::Approx(kSilverman * 0.5).epsilon(1e-14));
  CHECK(silverman_bandwidth(v) == doctest::Approx(0.52961).epsilon(1e-5));
  const std::vector<double> flat(10, 3.0);
  CHECK(silverman_bandwidth(flat) == doctest::Approx(kSilverman * 1e-6 * std::pow(10.0, -0.2)).epsilon(1e-12));
  const std::vector<double> pair{0, 1};
  CHECK(silverman_bandwidth(pair) == doctest::Approx(kSilverman * 0.5 * std::pow(2.0, -0.2)).epsilon(1e-14));
  CHECK(silverman_bandwidth(pair) == doctest::Approx(0.461054).epsilon(1e-5));

  SUBCASE("scales linearly") {
    Rng rng(3);
    std::vector<double> x(50), y(50);
    for (std::size_t i = 0; i < 50; ++i) {
      x[i] = rng.normal();
      y[i] = 3.5 * x[i];
    }
    CHECK(silverman_bandwidth(y) == doctest::Approx(3.5 * silverman_bandwidth(x)).epsilon(1e-13));
  }
}

TEST_CASE("fit_product_kde") {
  const auto single = fit_product_kde(test::column({0.0}));
  CHECK(single.dim() == 1);
  CHECK(single.centers(0)[0] == 0.0);
  CHECK(single.bandwidth(0) == doctest::Approx(kSilverman * 1e-6).epsilon(1e-12));

  std::vector<double> v(64);
  for (std::size_t i = 0; i < 32; ++i) {
    v[2 * i] = i % 2 ? 1.0 : -1.0;
    v[2 * i + 1] = i % 2 ? 2.0 : -2.0;
  }
  const auto kde = fit_product_kde(Dataset(32, 2, v));
  CHECK(kde.bandwidth(0) == doctest::Approx(0.52961).epsilon(1e-5));
  CHECK(kde.bandwidth(1) == doctest::Approx(1.05922).epsilon(1e-5));
  CHECK_THROWS_AS(fit_product_kde(Dataset(0, 2, {})), EmptyBlock);
}

TEST_CASE("pixel-sized block fits quickly") {
  Rng rng(9);
  std::vector<double> px(60 * 3072);
  for (auto& p : px) p = static_cast<double>(rng.index(256)) / 255.0;
  const Dataset block(60, 3072, std::move(px));
  const auto t0 = std::chrono::steady_clock::now();
  const auto kde = fit_product_kde(block);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  CHECK(kde.dim() == 3072);
  for (double b : kde.bandwidths()) CHECK(b > 0);
  CHECK(ms < 50.0);
}

TEST_CASE("product kde log pdf") {
  const ProductKde one(1, 1, {0.0}, {1.0});
  const double x0[] = {0.0};
  CHECK(one.log_pdf(x0) == doctest::Approx(-kLogSqrt2Pi).epsilon(1e-15));

  const ProductKde two(2, 3, {0.1, -0.4, 1.2, 0.1, -0.4, 1.2}, {0.7, 0.7});
  const double a = 0.35;
  const double xa[] = {a};
  const double xaa[] = {a, a};
  const ProductKde half(1, 3, {0.1, -0.4, 1.2}, {0.7});
  CHECK(two.log_pdf(xaa) == 2 * half.log_pdf(xa));

  SUBCASE("far from every center the value stays finite") {
    const std::size_t d = 3072;
    std::vector<double> centers(d, 0.0), bw(d, 0.01), x(d, 1.0); // 100 sigma per dimension
    const ProductKde far(d, 1, centers, bw);
    const double v = far.log_pdf(x);
    CHECK(std::isfinite(v));
    const double per_dim = -kLogSqrt2Pi - 5000.0 - std::log(0.01);
    CHECK(v == doctest::Approx(d * per_dim).epsilon(1e-12));
  }

  SUBCASE("additive across dimensions") {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
      const std::size_t d = 1 + rng.index(64), r = 1 + rng.index(40);
      const auto kde = fit_product_kde(test::random_dataset(r, d, 100 + t));
      std::vector<double> x(d);
      for (auto& v : x) v = rng.normal(0, 2);
      double sum = 0;
      for (std::size_t j = 0; j < d; ++j) sum += kde.marginal(j).log_pdf(x[j]);
      CHECK(std::abs(kde.log_pdf(x) - sum) <= 1e-12 * std::max(1.0, std::abs(sum)));
    }
  }

  SUBCASE("codebook batch equals the direct path bit for bit") {
    Rng rng(5);
    std::vector<double> px(80 * 16);
    for (auto& p : px) p = static_cast<double>(rng.index(6)) / 5.0;
    const Dataset data(80, 16, std::move(px));
    const auto kde = fit_product_kde(data.subset(std::vector<std::size_t>{0, 3, 7, 11, 40}));
    const ColumnCodebook book(data);
    std::vector<double> batch(data.size());
    kde.log_pdf_batch(book, batch);
    for (std::size_t i = 0; i < data.size(); ++i) CHECK(batch[i] == kde.log_pdf(data.row(i)));
  }

  SUBCASE("column permutation changes nothing") {
    const auto data = test::random_dataset(30, 12, 8);
    std::vector<std::size_t> perm{5, 2, 11, 0, 1, 3, 4, 10, 9, 8, 7, 6};
    const auto permuted = data.permute_columns(perm);
    const auto a = fit_product_kde(data);
    const auto b = fit_product_kde(permuted);
    const auto probe = test::random_dataset(10, 12, 9);
    const auto probe_p = probe.permute_columns(perm);
    for (std::size_t i = 0; i < 10; ++i)
      CHECK(std::abs(a.log_pdf(probe.row(i)) - b.log_pdf(probe_p.row(i))) < 1e-9);
  }
}

TEST_CASE("densities integrate to one") {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const auto data = test::random_dataset(2 + rng.index(20), 1, 200 + t, 2.0);
    const Density g = fit_gaussian(data);
    const Density k = fit_product_kde(data);
    for (const Density* d : {&g, &k}) {
      const auto f = [&](double x) {
        const double p[] = {x};
        return std::exp(log_pdf(*d, p));
      };
      const double mass = boost::math::quadrature::tanh_sinh<double>().integrate(
          [&](double x) { return f(x); }, -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity());
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
  SUBCASE("two dimensions by tensor quadrature") {
    const auto data = test::random_dataset(12, 2, 77);
    const Density g = fit_gaussian(data);
    const Density k = fit_product_kde(data);
    for (const Density* d : {&g, &k}) {
      const double mass = integrate(
          [&](double x) {
            return integrate(
                [&](double y) {
                  const double p[] = {x, y};
                  return std::exp(log_pdf(*d, p));
                },
                -12, 12);
          },
          -12, 12);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("exact L2 cross terms") {
  const double self = 1.0 / (2.0 * std::sqrt(std::numbers::pi));
  CHECK(exact_l2_cross(test::normal1(0), test::normal1(0)) == doctest::Approx(self).epsilon(1e-14));
  const double far = exact_l2_cross(test::normal1(0), test::normal1(10));
  CHECK(far == doctest::Approx(static_cast<double>(test::normal_pdf(10, 0, 2))).epsilon(1e-12));
  CHECK(far == doctest::Approx(5.2e-12).epsilon(0.01));

  const Density a = ProductKde(1, 1, {0.0}, {1.0});
  CHECK(exact_l2_cross(a, a) == doctest::Approx(self).epsilon(1e-14));
  CHECK_THROWS_AS(exact_l2_cross(a, test::normal1(0)), NoClosedForm);

  SUBCASE("matches quadrature of the product") {
    Rng rng(12);
    for (int t = 0; t < 20; ++t) {
      const Density p = fit_product_kde(test::random_dataset(2 + rng.index(8), 1, 300 + t));
      const Density q = fit_product_kde(test::random_dataset(2 + rng.index(8), 1, 400 + t));
      const double quad = integrate(
          [&](double x) {
            const double v[] = {x};
            return std::exp(log_pdf(p, v) + log_pdf(q, v));
          },
          -15, 15);
      CHECK(exact_l2_cross(p, q) == doctest::Approx(quad).epsilon(1e-8));
    }
  }
}
