#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pmode/mixture.hpp"

namespace pmode {

enum class LossKind { l2, kl };

// The L2 cross term is evaluated in linear space; beyond this dimension the
// densities underflow and the loss is refused.
inline constexpr std::size_t kMaxL2Dimension = 32;

/// Axis-aligned box Q and sample budget for Monte Carlo region integrals.
struct MonteCarloConfig {
  std::size_t samples = 200000;
  std::vector<double> lower;
  std::vector<double> upper;
  std::uint64_t seed = 0;

  void validate(std::size_t dim) const;
  double volume() const;
};

// Per-dimension data min/max widened by `inflation` pooled standard deviations.
MonteCarloConfig default_monte_carlo_box(const Dataset& samples, std::size_t draws,
                                         std::uint64_t seed, double inflation = 6.0);

struct LossSpec {
  LossKind kind = LossKind::kl;
  std::optional<MonteCarloConfig> monte_carlo;
};

// Mean negative log-likelihood over the validation rows.
double kl_validation_loss(const MixtureDensity& mix, const Dataset& validation);

// -2 * mean f(X_i) + ||f||_2^2 with the norm computed exactly.
double l2_validation_loss(const MixtureDensity& mix, const Dataset& validation);

double validation_loss(LossKind kind, const MixtureDensity& mix, const Dataset& validation);

// Reductions shared with the partition search so cached and fresh
// evaluations produce identical losses.
double kl_from_log_densities(std::span<const double> mixture_log_pdf);
double l2_from_log_densities(std::span<const double> mixture_log_pdf, double norm_sq);
void check_l2_dimension(std::size_t dim);

enum class ScheffeChoice { first, second };

struct ScheffeReport {
  ScheffeChoice choice;
  double empirical_mass;  // fraction of samples with f > g
  double region_mass_f;   // Monte Carlo estimate of the f-mass of {f > g}
  double region_mass_g;
};

/// Pairwise Scheffe selection between f and g.
///
/// Returns the first density when its mass on {f > g} is strictly closer to
/// the empirical frequency of that region than g's mass; ties go to g.
ScheffeReport scheffe_compare(const Density& f, const Density& g, const Dataset& samples,
                              const MonteCarloConfig& mc);

inline ScheffeChoice scheffe_select(const Density& f, const Density& g, const Dataset& samples,
                                    const MonteCarloConfig& mc) {
  return scheffe_compare(f, g, samples, mc).choice;
}

} // namespace pmode
