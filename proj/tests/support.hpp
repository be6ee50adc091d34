#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "pmode/core.hpp"
#include "pmode/estimators.hpp"
#include "pmode/rng.hpp"

namespace pmode::test {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline Density normal1(double mean, double var = 1.0) {
  return GaussianDensity(Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, var));
}

// Univariate normal density in long double, independent of the library.
inline long double normal_pdf(long double x, long double mean, long double var) {
  const long double z = x - mean;
  return std::exp(-z * z / (2 * var)) / std::sqrt(2 * std::numbers::pi_v<long double> * var);
}

inline Dataset column(std::vector<double> v) {
  const std::size_t n = v.size();
  return Dataset(n, 1, std::move(v));
}

inline Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed, double spread = 1.0) {
  Rng rng(seed);
  std::vector<double> v(n * d);
  for (auto& x : v) x = rng.normal(0.0, spread);
  return Dataset(n, d, std::move(v));
}

} // namespace pmode::test
