#include <algorithm>
#include <cmath>
#include <limits>

#include "pmode/error.hpp"
#include "pmode/optimizer.hpp"
#include "pmode/rng.hpp"
#include "pmode/simd.hpp"

namespace pmode {
namespace {

constexpr std::size_t kMaxIterations = 100;
constexpr double kMoveTolerance = 1e-8;

struct Clustering {
  std::vector<double> centroids; // k x d
  std::vector<std::uint32_t> labels;
  std::vector<double> dist;      // squared distance to own centroid
};

void assign(const Dataset& data, std::size_t k, Clustering& c) {
  const std::size_t d = data.dim();
  for (std::size_t i = 0; i < data.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const double dj =
          simd::squared_distance(data.row(i), std::span<const double>(&c.centroids[j * d], d));
      if (dj < best) {
        best = dj;
        arg = static_cast<std::uint32_t>(j);
      }
    }
    c.labels[i] = arg;
    c.dist[i] = best;
  }
}

std::vector<double> seed_plus_plus(const Dataset& data, std::size_t k, Rng& rng) {
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  std::vector<double> centroids(k * d);
  std::size_t first = rng.index(n);
  std::copy_n(data.row(first).begin(), d, centroids.begin());
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i)
    nearest[i] = simd::squared_distance(data.row(i), data.row(first));
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (double v : nearest) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > target && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.index(n);
    }
    std::copy_n(data.row(pick).begin(), d, centroids.begin() + static_cast<std::ptrdiff_t>(j * d));
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(nearest[i], simd::squared_distance(data.row(i), data.row(pick)));
  }
  return centroids;
}

// Gives every empty cluster the point farthest from its own centroid, taken
// from a cluster with at least two members.
bool fill_empty(const Dataset& data, std::size_t k, Clustering& c) {
  const std::size_t d = data.dim();
  bool changed = false;
  std::vector<std::size_t> counts(k, 0);
  for (auto l : c.labels) ++counts[l];
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] > 0) continue;
    std::size_t far = data.size();
    double far_dist = -1.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (counts[c.labels[i]] < 2) continue;
      if (c.dist[i] > far_dist) {
        far_dist = c.dist[i];
        far = i;
      }
    }
    if (far == data.size()) break; // cannot happen while n >= k
    --counts[c.labels[far]];
    c.labels[far] = static_cast<std::uint32_t>(j);
    counts[j] = 1;
    c.dist[far] = 0.0;
    std::copy_n(data.row(far).begin(), d, c.centroids.begin() + static_cast<std::ptrdiff_t>(j * d));
    changed = true;
  }
  return changed;
}

} // namespace

Assignment kmeans_init(const Dataset& estimation, std::size_t k, std::uint64_t seed) {
  const std::size_t n = estimation.size();
  const std::size_t d = estimation.dim();
  if (k == 0) throw InvalidConfig("k must be at least 1");
  if (n < k) throw InvalidConfig("k-means needs at least k points");

  Rng rng(seed);
  Clustering c{seed_plus_plus(estimation, k, rng), std::vector<std::uint32_t>(n),
               std::vector<double>(n)};
  assign(estimation, k, c);
  fill_empty(estimation, k, c);

  std::vector<double> next(k * d);
  std::vector<std::size_t> counts(k);
  for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = estimation.row(i);
      double* dst = &next[c.labels[i] * d];
      for (std::size_t t = 0; t < d; ++t) dst[t] += x[t];
      ++counts[c.labels[i]];
    }
    double moved = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double* dst = &next[j * d];
      for (std::size_t t = 0; t < d; ++t) dst[t] /= static_cast<double>(counts[j]);
      moved = std::max(moved, simd::squared_distance(std::span<const double>(dst, d),
                                                     std::span<const double>(&c.centroids[j * d], d)));
    }
    c.centroids.swap(next);
    assign(estimation, k, c);
    const bool refilled = fill_empty(estimation, k, c);
    if (!refilled && std::sqrt(moved) < kMoveTolerance) break;
  }
  return Assignment(std::move(c.labels), k);
}

} // namespace pmode
