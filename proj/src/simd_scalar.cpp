#include <cmath>
#include <limits>

#include "pmode/simd.hpp"

namespace pmode::simd::scalar {

double log_sum_gauss(const double* centers, std::size_t count, double x, double inv_two_var) {
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < count; ++s) {
    const double d = centers[s] - x;
    nearest = std::fmin(nearest, d * d);
  }
  double sum = 0.0;
  for (std::size_t s = 0; s < count; ++s) {
    const double d = centers[s] - x;
    sum += std::exp(-(d * d - nearest) * inv_two_var);
  }
  return -nearest * inv_two_var + std::log(sum);
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

} // namespace pmode::simd::scalar
