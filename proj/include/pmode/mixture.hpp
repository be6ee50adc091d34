#pragma once

#include <memory>
#include <span>
#include <vector>

#include "pmode/estimators.hpp"

namespace pmode {

/// Finite mixture sum_j w_j p_j, evaluated in log space.
///
/// Slots with weight exactly zero may hold no component and are skipped
/// during evaluation. Components are shared immutable objects.
class MixtureDensity {
public:
  using ComponentPtr = std::shared_ptr<const Density>;

  MixtureDensity(std::vector<double> weights, std::vector<ComponentPtr> components);

  static MixtureDensity single(Density component);

  std::size_t k() const { return weights_.size(); }
  std::size_t dim() const { return dim_; }
  double weight(std::size_t j) const { return weights_[j]; }
  std::span<const double> weights() const { return weights_; }
  // Null for absent slots.
  const Density* component(std::size_t j) const { return components_[j].get(); }
  const ComponentPtr& component_ptr(std::size_t j) const { return components_[j]; }

private:
  std::vector<double> weights_;
  std::vector<ComponentPtr> components_;
  std::size_t dim_ = 0;
};

double mixture_log_pdf(const MixtureDensity& mix, std::span<const double> x);

// Row-wise mixture log density; `book` is optional (see log_pdf_batch).
std::vector<double> mixture_log_pdf_batch(const MixtureDensity& mix, const Dataset& data,
                                          const ColumnCodebook* book = nullptr);

/// Combines per-component log densities into mixture log densities.
///
/// component_log_pdf[j] holds log p_j at every row (empty for weight-zero
/// slots). This is the single combination routine behind every mixture
/// evaluation, so cached and from-scratch paths agree bit for bit.
void combine_log_densities(std::span<const double> weights,
                           std::span<const std::span<const double>> component_log_pdf,
                           std::span<double> out);

// ||f||_2^2 from the k x k (row-major) matrix of pairwise inner products.
double l2_norm_from_cross(std::span<const double> weights, std::span<const double> cross);

// Sum over component pairs of w_a w_b <p_a, p_b>; throws NoClosedForm when a
// pair has no analytic inner product.
double exact_l2_norm_sq(const MixtureDensity& mix);

} // namespace pmode
