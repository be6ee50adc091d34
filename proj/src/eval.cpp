#include "pmode/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pmode/error.hpp"
#include "pmode/loss.hpp"

namespace pmode {
namespace {

// Midranks (1-based) of values; ties share the average of their positions.
std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

} // namespace

std::vector<double> anomaly_scores(const MixtureDensity& model, const Dataset& test,
                                   const ColumnCodebook* book) {
  auto scores = mixture_log_pdf_batch(model, test, book);
  for (auto& s : scores) s = -s;
  return scores;
}

double auroc(std::span<const double> anomalous, std::span<const double> nominal) {
  if (anomalous.empty() || nominal.empty())
    throw InvalidInput("AUROC needs nonempty nominal and anomalous score sets");
  std::vector<double> pooled(anomalous.begin(), anomalous.end());
  pooled.insert(pooled.end(), nominal.begin(), nominal.end());
  const auto ranks = midranks(pooled);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < anomalous.size(); ++i) rank_sum += ranks[i];
  const double na = static_cast<double>(anomalous.size());
  const double nn = static_cast<double>(nominal.size());
  return (rank_sum - 0.5 * na * (na + 1.0)) / (na * nn);
}

double mean_test_log_likelihood(const MixtureDensity& model, const Dataset& test) {
  if (test.empty()) throw InvalidInput("test set is empty");
  return -kl_validation_loss(model, test);
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMethod method) {
  if (a.size() != b.size()) throw InvalidInput("paired samples differ in length");
  if (a.empty()) throw InvalidInput("paired samples are empty");
  std::vector<double> diffs(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];

  WilcoxonResult res;
  res.median_difference = median(diffs);

  std::vector<double> nonzero;
  for (double d : diffs)
    if (d != 0.0) nonzero.push_back(d);
  res.effective_n = nonzero.size();
  if (nonzero.empty()) return res;

  std::vector<double> mags(nonzero.size());
  for (std::size_t i = 0; i < nonzero.size(); ++i) mags[i] = std::abs(nonzero[i]);
  const auto ranks = midranks(mags);
  for (std::size_t i = 0; i < nonzero.size(); ++i)
    (nonzero[i] > 0.0 ? res.w_plus : res.w_minus) += ranks[i];
  const double w = std::min(res.w_plus, res.w_minus);
  const std::size_t n = nonzero.size();

  const bool exact = method == WilcoxonMethod::exact ||
                     (method == WilcoxonMethod::automatic && n <= kWilcoxonExactLimit);
  res.exact = exact;
  if (exact) {
    // Doubled midranks are integers; count sign patterns by subset-sum DP.
    std::vector<std::size_t> twice(n);
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      twice[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
      total += twice[i];
    }
    std::vector<double> ways(total + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t r : twice)
      for (std::size_t s = total; s >= r; --s) ways[s] += ways[s - r];
    const auto limit = static_cast<std::size_t>(std::llround(2.0 * w));
    double tail = 0.0;
    for (std::size_t s = 0; s <= limit; ++s) tail += ways[s];
    res.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
    return res;
  }

  const double nd = static_cast<double>(n);
  const double mean = nd * (nd + 1.0) / 4.0;
  double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
  std::vector<double> sorted = mags;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    var -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  const double diff = w - mean;
  if (var <= 0.0 || diff == 0.0) return res;
  const double z = (diff - 0.5 * (diff > 0 ? 1.0 : -1.0)) / std::sqrt(var);
  res.p_value = std::min(1.0, 2.0 * normal_cdf(-std::abs(z)));
  return res;
}

} // namespace pmode
