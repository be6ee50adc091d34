#pragma once

#include <span>
#include <vector>

#include "pmode/mixture.hpp"

namespace pmode {

// Higher score = more anomalous.
struct ScoredSet {
  std::vector<double> nominal;
  std::vector<double> anomalous;
};

// -log density of each row; `book` optionally accelerates product KDEs.
std::vector<double> anomaly_scores(const MixtureDensity& model, const Dataset& test,
                                   const ColumnCodebook* book = nullptr);

// P(anomaly score > nominal score) with ties counted as one half, by midrank sums.
double auroc(std::span<const double> anomalous, std::span<const double> nominal);
inline double auroc(const ScoredSet& s) { return auroc(s.anomalous, s.nominal); }

double mean_test_log_likelihood(const MixtureDensity& model, const Dataset& test);

enum class WilcoxonMethod { automatic, exact, normal };

struct WilcoxonResult {
  double median_difference = 0.0; // median of a - b including zero differences
  double p_value = 1.0;           // two-sided
  double w_plus = 0.0;
  double w_minus = 0.0;
  std::size_t effective_n = 0;    // nonzero differences
  bool exact = false;
};

// Effective sizes up to this use the exact null distribution under `automatic`.
inline constexpr std::size_t kWilcoxonExactLimit = 25;

/// Two-sided Wilcoxon signed-rank test of paired samples.
///
/// Zero differences are dropped, tied magnitudes get midranks. The exact
/// p-value comes from the permutation distribution of W+ over all sign
/// patterns of the observed ranks; the normal approximation uses the tie and
/// continuity corrections.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMethod method = WilcoxonMethod::automatic);

double median(std::vector<double> values);

} // namespace pmode
