#include "pmode/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pmode/error.hpp"

namespace pmode {

MixtureDensity::MixtureDensity(std::vector<double> weights, std::vector<ComponentPtr> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (weights_.empty()) throw InvalidConfig("mixture needs at least one slot");
  if (weights_.size() != components_.size())
    throw ShapeError("mixture weights and components differ in length");
  double total = 0.0;
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    const double w = weights_[j];
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidConfig("mixture weights must be >= 0");
    total += w;
    if (w > 0.0 && !components_[j]) throw InvalidConfig("positive weight without a component");
    if (components_[j]) {
      const std::size_t d = density_dim(*components_[j]);
      if (dim_ == 0) dim_ = d;
      if (d != dim_) throw ShapeError("mixture components differ in dimension");
    }
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidConfig("mixture weights must sum to 1");
}

MixtureDensity MixtureDensity::single(Density component) {
  return MixtureDensity({1.0}, {std::make_shared<const Density>(std::move(component))});
}

double mixture_log_pdf(const MixtureDensity& mix, std::span<const double> x) {
  if (x.size() != mix.dim()) throw ShapeError("point dimension does not match mixture");
  std::vector<double> terms;
  terms.reserve(mix.k());
  for (std::size_t j = 0; j < mix.k(); ++j) {
    if (mix.weight(j) > 0.0)
      terms.push_back(std::log(mix.weight(j)) + log_pdf(*mix.component(j), x));
  }
  return log_sum_exp(terms);
}

void combine_log_densities(std::span<const double> weights,
                           std::span<const std::span<const double>> component_log_pdf,
                           std::span<double> out) {
  std::vector<std::size_t> live;
  std::vector<double> log_w;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] > 0.0) {
      live.push_back(j);
      log_w.push_back(std::log(weights[j]));
    }
  }
  std::vector<double> terms(live.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t t = 0; t < live.size(); ++t)
      terms[t] = log_w[t] + component_log_pdf[live[t]][i];
    out[i] = log_sum_exp(terms);
  }
}

std::vector<double> mixture_log_pdf_batch(const MixtureDensity& mix, const Dataset& data,
                                          const ColumnCodebook* book) {
  if (data.dim() != mix.dim()) throw ShapeError("dataset dimension does not match mixture");
  std::vector<std::vector<double>> per(mix.k());
  std::vector<std::span<const double>> views(mix.k());
  for (std::size_t j = 0; j < mix.k(); ++j) {
    if (mix.weight(j) > 0.0) {
      per[j].resize(data.size());
      log_pdf_batch(*mix.component(j), data, book, per[j]);
      views[j] = per[j];
    }
  }
  std::vector<double> out(data.size());
  combine_log_densities(mix.weights(), views, out);
  return out;
}

double l2_norm_from_cross(std::span<const double> weights, std::span<const double> cross) {
  const std::size_t k = weights.size();
  std::vector<double> terms;
  for (std::size_t a = 0; a < k; ++a) {
    if (weights[a] <= 0.0) continue;
    for (std::size_t b = a; b < k; ++b) {
      if (weights[b] <= 0.0) continue;
      const double factor = a == b ? 1.0 : 2.0;
      terms.push_back(factor * weights[a] * weights[b] * cross[a * k + b]);
    }
  }
  // Sorted summation keeps the value independent of component order.
  std::sort(terms.begin(), terms.end());
  return std::accumulate(terms.begin(), terms.end(), 0.0);
}

double exact_l2_norm_sq(const MixtureDensity& mix) {
  const std::size_t k = mix.k();
  std::vector<double> cross(k * k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    if (mix.weight(a) <= 0.0) continue;
    for (std::size_t b = a; b < k; ++b) {
      if (mix.weight(b) <= 0.0) continue;
      cross[a * k + b] = exact_l2_cross(*mix.component(a), *mix.component(b));
    }
  }
  return l2_norm_from_cross(mix.weights(), cross);
}

} // namespace pmode
