#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pmode {

/// Row-major n x d matrix of finite reals with optional integer class tags.
///
/// A dataset may hold zero rows (an empty partition block is still a
/// dataset); every operation that needs samples checks for that itself.
class Dataset {
public:
  Dataset() = default;
  Dataset(std::size_t rows, std::size_t dim, std::vector<double> values,
          std::vector<int> labels = {}, std::string name = {});

  static Dataset from_rows(const std::vector<std::vector<double>>& rows,
                           std::vector<int> labels = {}, std::string name = {});

  std::size_t size() const { return rows_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * dim_ + j]; }
  std::span<const double> values() const { return values_; }

  bool has_labels() const { return !labels_.empty(); }
  const std::vector<int>& labels() const { return labels_; }
  const std::string& name() const { return name_; }

  std::vector<double> column(std::size_t j) const;
  Dataset subset(std::span<const std::size_t> indices) const;
  // Same rows with columns reordered: new column c is old column perm[c].
  Dataset permute_columns(std::span<const std::size_t> perm) const;

private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::vector<int> labels_;
  std::string name_;
};

/// Hard assignment of m estimation points to k components (labels 0..k-1).
class Assignment {
public:
  Assignment(std::vector<std::uint32_t> labels, std::size_t k);

  static Assignment constant(std::size_t m, std::size_t k, std::uint32_t label = 0);

  std::size_t size() const { return labels_.size(); }
  std::size_t k() const { return k_; }
  std::uint32_t operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<std::uint32_t>& labels() const { return labels_; }

  // Unchecked in release builds beyond the range test.
  void set(std::size_t i, std::uint32_t label);

  std::vector<std::size_t> counts() const;
  // Row indices of each block, ascending.
  std::vector<std::vector<std::size_t>> blocks() const;

  friend bool operator==(const Assignment&, const Assignment&) = default;

private:
  std::vector<std::uint32_t> labels_;
  std::size_t k_;
};

struct SplitPair {
  Dataset estimation;
  Dataset validation;
  std::uint64_t seed = 0;
};

// First floor(s*n) rows of a seeded Fisher-Yates permutation form the
// estimation set; the rest form the validation set.
SplitPair split_dataset(const Dataset& data, double s, std::uint64_t seed);

// Explicit sizes; rows beyond estimation + validation are dropped.
SplitPair split_dataset_sizes(const Dataset& data, std::size_t estimation,
                              std::size_t validation, std::uint64_t seed);

// Seeded uniform permutation of 0..n-1.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

std::vector<double> weights_from_assignment(const Assignment& a);

/// log(sum(exp(terms))) evaluated by max shifting.
///
/// Sorts `terms` in place so the result does not depend on their input order.
double log_sum_exp(std::span<double> terms);

} // namespace pmode
