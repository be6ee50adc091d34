#pragma once

#include <cstdint>
#include <vector>

#include "pmode/mixture.hpp"

namespace pmode {

struct EmConfig {
  std::size_t k = 1;
  std::size_t max_iterations = 1000;
  double tolerance = 1e-6;    // on the change in mean log-likelihood
  double regularizer = 1e-6;  // added to covariance diagonals
  std::uint64_t seed = 0;     // k-means initialization

  void validate() const;
};

struct EmResult {
  MixtureDensity mixture;
  // Mean training log-likelihood at each E-step.
  std::vector<double> log_likelihood;
  std::size_t iterations = 0;
  bool converged = false;
  // Largest |sum_j r_ij - 1| over all rows and E-steps.
  double responsibility_error = 0.0;
};

// Full-covariance Gaussian mixture fitted by EM from a k-means start.
EmResult em_fit_gmm(const Dataset& data, const EmConfig& cfg);

// Single product KDE with Silverman bandwidths: PMODE with k = 1.
MixtureDensity naive_bayes_fit(const Dataset& data);

} // namespace pmode
