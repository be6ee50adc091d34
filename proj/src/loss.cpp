#include "pmode/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmode/error.hpp"
#include "pmode/rng.hpp"

namespace pmode {

void MonteCarloConfig::validate(std::size_t dim) const {
  if (samples == 0) throw InvalidConfig("monte carlo needs at least one draw");
  if (lower.size() != dim || upper.size() != dim)
    throw ShapeError("monte carlo box dimension does not match densities");
  for (std::size_t j = 0; j < dim; ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]) || !(upper[j] > lower[j]))
      throw InvalidConfig("monte carlo box must have finite bounds and positive volume");
  }
}

double MonteCarloConfig::volume() const {
  double v = 1.0;
  for (std::size_t j = 0; j < lower.size(); ++j) v *= upper[j] - lower[j];
  return v;
}

MonteCarloConfig default_monte_carlo_box(const Dataset& samples, std::size_t draws,
                                         std::uint64_t seed, double inflation) {
  if (samples.empty()) throw InvalidInput("monte carlo box needs samples");
  const std::size_t d = samples.dim();
  MonteCarloConfig mc;
  mc.samples = draws;
  mc.seed = seed;
  mc.lower.assign(d, 0.0);
  mc.upper.assign(d, 0.0);
  double pooled_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = samples.column(j);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    mc.lower[j] = *lo;
    mc.upper[j] = *hi;
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    pooled_var += ss / static_cast<double>(col.size());
  }
  double pad = inflation * std::sqrt(pooled_var / static_cast<double>(d));
  if (!(pad > 0.0)) pad = 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    mc.lower[j] -= pad;
    mc.upper[j] += pad;
  }
  return mc;
}

void check_l2_dimension(std::size_t dim) {
  if (dim > kMaxL2Dimension)
    throw InvalidConfig("L2 loss is limited to dimension <= " + std::to_string(kMaxL2Dimension) +
                        " (got " + std::to_string(dim) + "); use the KL loss");
}

double kl_from_log_densities(std::span<const double> mixture_log_pdf) {
  double sum = 0.0;
  for (double v : mixture_log_pdf) sum += v;
  return -(sum / static_cast<double>(mixture_log_pdf.size()));
}

double l2_from_log_densities(std::span<const double> mixture_log_pdf, double norm_sq) {
  double sum = 0.0;
  for (double v : mixture_log_pdf) sum += std::exp(v);
  return -2.0 * (sum / static_cast<double>(mixture_log_pdf.size())) + norm_sq;
}

double kl_validation_loss(const MixtureDensity& mix, const Dataset& validation) {
  if (validation.empty()) throw InvalidConfig("validation set is empty");
  return kl_from_log_densities(mixture_log_pdf_batch(mix, validation));
}

double l2_validation_loss(const MixtureDensity& mix, const Dataset& validation) {
  if (validation.empty()) throw InvalidConfig("validation set is empty");
  check_l2_dimension(validation.dim());
  const double norm = exact_l2_norm_sq(mix);
  return l2_from_log_densities(mixture_log_pdf_batch(mix, validation), norm);
}

double validation_loss(LossKind kind, const MixtureDensity& mix, const Dataset& validation) {
  return kind == LossKind::kl ? kl_validation_loss(mix, validation)
                              : l2_validation_loss(mix, validation);
}

ScheffeReport scheffe_compare(const Density& f, const Density& g, const Dataset& samples,
                              const MonteCarloConfig& mc) {
  if (samples.empty()) throw InvalidInput("scheffe selection needs samples");
  const std::size_t d = density_dim(f);
  if (density_dim(g) != d || samples.dim() != d)
    throw ShapeError("scheffe operands differ in dimension");
  mc.validate(d);

  std::size_t inside = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto x = samples.row(i);
    if (log_pdf(f, x) > log_pdf(g, x)) ++inside;
  }
  const double empirical = static_cast<double>(inside) / static_cast<double>(samples.size());

  Rng rng(mc.seed);
  std::vector<double> z(d);
  double sum_f = 0.0;
  double sum_g = 0.0;
  for (std::size_t s = 0; s < mc.samples; ++s) {
    for (std::size_t j = 0; j < d; ++j) z[j] = rng.uniform(mc.lower[j], mc.upper[j]);
    const double lf = log_pdf(f, z);
    const double lg = log_pdf(g, z);
    if (lf > lg) {
      sum_f += std::exp(lf);
      sum_g += std::exp(lg);
    }
  }
  const double vol = mc.volume();
  const double n = static_cast<double>(mc.samples);
  const double mass_f = vol * (sum_f / n);
  const double mass_g = vol * (sum_g / n);
  const bool pick_f = std::abs(mass_f - empirical) < std::abs(mass_g - empirical);
  return {pick_f ? ScheffeChoice::first : ScheffeChoice::second, empirical, mass_f, mass_g};
}

} // namespace pmode
