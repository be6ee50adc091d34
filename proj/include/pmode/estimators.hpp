#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pmode/core.hpp"

namespace pmode {

// Added to every fitted covariance diagonal so degenerate blocks stay positive definite.
inline constexpr double kCovarianceRegularizer = 1e-6;
// Lower bound applied to the sample standard deviation in the bandwidth rule.
inline constexpr double kBandwidthFloor = 1e-6;

/// Multivariate normal with a cached Cholesky factor.
class GaussianDensity {
public:
  // Throws FitError when the covariance is not symmetric positive definite.
  GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::MatrixXd& cholesky_lower() const { return lower_; }
  double log_det() const { return log_det_; }

  double log_pdf(std::span<const double> x) const;
  // Every row of `data` at once via a triangular solve; agrees with log_pdf
  // to rounding, not bit for bit.
  void log_pdf_batch(const Dataset& data, std::span<double> out) const;

private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd lower_;
  double log_det_ = 0.0;
};

/// Univariate Gaussian-kernel density estimate.
class Kde1D {
public:
  Kde1D(std::vector<double> centers, double bandwidth);

  std::span<const double> centers() const { return centers_; }
  double bandwidth() const { return bandwidth_; }
  double log_pdf(double x) const;

private:
  std::vector<double> centers_;
  double bandwidth_;
};

/// Distinct values of every column of a dataset, plus per-row codes.
///
/// Pixel data takes at most 256 values per coordinate, so a product KDE
/// evaluated through the codebook computes each marginal once per distinct
/// value instead of once per row. Results are bit-identical to the direct path.
class ColumnCodebook {
public:
  explicit ColumnCodebook(const Dataset& data);

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return values_.size(); }
  std::span<const double> values(std::size_t j) const { return values_[j]; }
  // Codes for column j, one per row.
  std::span<const std::uint32_t> codes(std::size_t j) const {
    return {codes_.data() + j * rows_, rows_};
  }

private:
  std::size_t rows_;
  std::vector<std::vector<double>> values_;
  std::vector<std::uint32_t> codes_;
};

/// Product of d univariate KDEs sharing the same r sample points.
class ProductKde {
public:
  // centers_by_dim holds column j of the sample matrix at [j*count, (j+1)*count).
  ProductKde(std::size_t dim, std::size_t count, std::vector<double> centers_by_dim,
             std::vector<double> bandwidths);

  std::size_t dim() const { return bandwidths_.size(); }
  std::size_t count() const { return count_; }
  double bandwidth(std::size_t j) const { return bandwidths_[j]; }
  std::span<const double> bandwidths() const { return bandwidths_; }
  std::span<const double> centers(std::size_t j) const {
    return {centers_.data() + j * count_, count_};
  }
  Kde1D marginal(std::size_t j) const;

  double log_marginal(std::size_t j, double x) const;
  double log_pdf(std::span<const double> x) const;
  // out[i] = log_pdf(row i); `book` must describe the rows being scored.
  void log_pdf_batch(const ColumnCodebook& book, std::span<double> out) const;

private:
  std::size_t count_;
  std::vector<double> centers_;
  std::vector<double> bandwidths_;
  std::vector<double> inv_two_var_;
  std::vector<double> log_norm_; // -log(count) - log(sigma*sqrt(2*pi)) per dimension
};

using Density = std::variant<GaussianDensity, ProductKde>;

enum class EstimatorKind { gaussian, product_kde };

std::size_t density_dim(const Density& density);
double log_pdf(const Density& density, std::span<const double> x);
// out[i] = log_pdf(density, data.row(i)). `book` may be null; it only speeds
// up product KDEs and must have been built from `data`.
void log_pdf_batch(const Density& density, const Dataset& data, const ColumnCodebook* book,
                   std::span<double> out);

GaussianDensity fit_gaussian(const Dataset& samples);
GaussianDensity fit_gaussian(const Dataset& samples, std::span<const std::size_t> rows);

double silverman_bandwidth(std::span<const double> values);

ProductKde fit_product_kde(const Dataset& samples);
ProductKde fit_product_kde(const Dataset& samples, std::span<const std::size_t> rows);

Density fit_density(EstimatorKind kind, const Dataset& samples, std::span<const std::size_t> rows);

// Integral of the product of two densities; throws NoClosedForm unless both
// are Gaussian or both are product KDEs of equal dimension.
double exact_l2_cross(const Density& a, const Density& b);

} // namespace pmode
