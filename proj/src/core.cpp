#include "pmode/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pmode/error.hpp"
#include "pmode/rng.hpp"

namespace pmode {

Dataset::Dataset(std::size_t rows, std::size_t dim, std::vector<double> values,
                 std::vector<int> labels, std::string name)
    : rows_(rows), dim_(dim), values_(std::move(values)), labels_(std::move(labels)),
      name_(std::move(name)) {
  if (dim_ == 0) throw ShapeError("dataset dimension must be at least 1");
  if (values_.size() != rows_ * dim_) throw ShapeError("dataset buffer does not match n*d");
  if (!labels_.empty() && labels_.size() != rows_)
    throw ShapeError("dataset labels do not match row count");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw InvalidInput("non-finite entry at row " + std::to_string(i / dim_) + ", column " +
                         std::to_string(i % dim_));
  }
}

Dataset Dataset::from_rows(const std::vector<std::vector<double>>& rows, std::vector<int> labels,
                           std::string name) {
  if (rows.empty()) throw ShapeError("from_rows needs at least one row to infer dimension");
  const std::size_t d = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * d);
  for (const auto& r : rows) {
    if (r.size() != d) throw ShapeError("ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Dataset(rows.size(), d, std::move(flat), std::move(labels), std::move(name));
}

std::vector<double> Dataset::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = values_[i * dim_ + j];
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> vals;
  vals.reserve(indices.size() * dim_);
  std::vector<int> labs;
  if (has_labels()) labs.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= rows_) throw ShapeError("subset index out of range");
    auto r = row(idx);
    vals.insert(vals.end(), r.begin(), r.end());
    if (has_labels()) labs.push_back(labels_[idx]);
  }
  return Dataset(indices.size(), dim_, std::move(vals), std::move(labs), name_);
}

Dataset Dataset::permute_columns(std::span<const std::size_t> perm) const {
  if (perm.size() != dim_) throw ShapeError("permutation length must equal dimension");
  std::vector<double> vals(values_.size());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t c = 0; c < dim_; ++c) vals[i * dim_ + c] = values_[i * dim_ + perm[c]];
  return Dataset(rows_, dim_, std::move(vals), labels_, name_);
}

Assignment::Assignment(std::vector<std::uint32_t> labels, std::size_t k)
    : labels_(std::move(labels)), k_(k) {
  if (k_ == 0) throw InvalidConfig("assignment needs k >= 1");
  if (labels_.empty()) throw InvalidConfig("assignment needs at least one entry");
  for (auto l : labels_)
    if (l >= k_) throw InvalidConfig("assignment label out of range");
}

Assignment Assignment::constant(std::size_t m, std::size_t k, std::uint32_t label) {
  return Assignment(std::vector<std::uint32_t>(m, label), k);
}

void Assignment::set(std::size_t i, std::uint32_t label) {
  if (label >= k_) throw InvalidConfig("assignment label out of range");
  labels_.at(i) = label;
}

std::vector<std::size_t> Assignment::counts() const {
  std::vector<std::size_t> c(k_, 0);
  for (auto l : labels_) ++c[l];
  return c;
}

std::vector<std::vector<std::size_t>> Assignment::blocks() const {
  std::vector<std::vector<std::size_t>> b(k_);
  for (std::size_t i = 0; i < labels_.size(); ++i) b[labels_[i]].push_back(i);
  return b;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.index(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

SplitPair split_dataset_sizes(const Dataset& data, std::size_t estimation, std::size_t validation,
                              std::uint64_t seed) {
  if (estimation == 0 || validation == 0)
    throw InvalidConfig("split would leave the estimation or validation set empty");
  if (estimation + validation > data.size())
    throw InvalidConfig("split sizes exceed the dataset (" + std::to_string(estimation) + " + " +
                        std::to_string(validation) + " > " + std::to_string(data.size()) + ")");
  const auto perm = seeded_permutation(data.size(), seed);
  std::span<const std::size_t> all(perm);
  return SplitPair{data.subset(all.subspan(0, estimation)),
                   data.subset(all.subspan(estimation, validation)), seed};
}

SplitPair split_dataset(const Dataset& data, double s, std::uint64_t seed) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidConfig("split ratio must lie in (0, 1)");
  if (data.size() < 2) throw InvalidConfig("split needs at least two rows");
  const auto m = static_cast<std::size_t>(std::floor(s * static_cast<double>(data.size())));
  if (m == 0 || m >= data.size())
    throw InvalidConfig("split ratio leaves the estimation or validation set empty");
  return split_dataset_sizes(data, m, data.size() - m, seed);
}

std::vector<double> weights_from_assignment(const Assignment& a) {
  const auto counts = a.counts();
  const double m = static_cast<double>(a.size());
  std::vector<double> w(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) w[j] = static_cast<double>(counts[j]) / m;
  return w;
}

double log_sum_exp(std::span<double> terms) {
  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  std::sort(terms.begin(), terms.end());
  const double top = terms.back();
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return top + std::log(sum);
}

} // namespace pmode
