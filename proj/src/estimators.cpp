#include "pmode/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pmode/error.hpp"
#include "pmode/simd.hpp"

namespace pmode {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112; // ln(2*pi)

// (4/3)^(1/5): the normal-reference constant of Silverman's rule.
const double kSilvermanConstant = std::pow(4.0 / 3.0, 0.2);

void require_dim(std::size_t expected, std::size_t got) {
  if (expected != got)
    throw ShapeError("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                     std::to_string(got));
}

std::vector<std::size_t> all_rows(const Dataset& data) {
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

} // namespace

GaussianDensity::GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const auto d = mean_.size();
  if (d == 0) throw ShapeError("gaussian needs dimension >= 1");
  if (covariance_.rows() != d || covariance_.cols() != d)
    throw ShapeError("covariance shape does not match mean");
  const double scale = std::max(1.0, covariance_.cwiseAbs().maxCoeff());
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw FitError("covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() != Eigen::Success) throw FitError("covariance is not positive definite");
  lower_ = llt.matrixL();
  log_det_ = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(lower_(i, i) > 0.0)) throw FitError("covariance is not positive definite");
    log_det_ += 2.0 * std::log(lower_(i, i));
  }
}

double GaussianDensity::log_pdf(std::span<const double> x) const {
  const std::size_t d = dim();
  require_dim(d, x.size());
  thread_local std::vector<double> y;
  y.resize(d);
  // Forward substitution L y = x - mean.
  double quad = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double v = x[i] - mean_[static_cast<Eigen::Index>(i)];
    for (std::size_t j = 0; j < i; ++j)
      v -= lower_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * y[j];
    y[i] = v / lower_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    quad += y[i] * y[i];
  }
  return -0.5 * (static_cast<double>(d) * kLogTwoPi + log_det_ + quad);
}

void GaussianDensity::log_pdf_batch(const Dataset& data, std::span<double> out) const {
  require_dim(dim(), data.dim());
  if (out.size() != data.size()) throw ShapeError("output span does not match row count");
  if (data.empty()) return;
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> x(data.values().data(), static_cast<Eigen::Index>(data.size()),
                                     static_cast<Eigen::Index>(dim()));
  Eigen::MatrixXd y = (x.rowwise() - mean_.transpose()).transpose();
  lower_.triangularView<Eigen::Lower>().solveInPlace(y);
  const double offset = static_cast<double>(dim()) * kLogTwoPi + log_det_;
  for (Eigen::Index i = 0; i < y.cols(); ++i)
    out[static_cast<std::size_t>(i)] = -0.5 * (offset + y.col(i).squaredNorm());
}

Kde1D::Kde1D(std::vector<double> centers, double bandwidth)
    : centers_(std::move(centers)), bandwidth_(bandwidth) {
  if (centers_.empty()) throw EmptyBlock("kde needs at least one center");
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
    throw InvalidConfig("kde bandwidth must be positive");
}

double Kde1D::log_pdf(double x) const {
  const double inv_two_var = 0.5 / (bandwidth_ * bandwidth_);
  const double log_norm = -std::log(static_cast<double>(centers_.size())) -
                          (std::log(bandwidth_) + 0.5 * kLogTwoPi);
  return log_norm + simd::log_sum_gauss(centers_, x, inv_two_var);
}

ColumnCodebook::ColumnCodebook(const Dataset& data)
    : rows_(data.size()), values_(data.dim()), codes_(data.size() * data.dim()) {
  std::vector<double> col;
  for (std::size_t j = 0; j < data.dim(); ++j) {
    col = data.column(j);
    std::vector<double> uniq = col;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::uint32_t* codes = codes_.data() + j * rows_;
    for (std::size_t i = 0; i < rows_; ++i)
      codes[i] = static_cast<std::uint32_t>(
          std::lower_bound(uniq.begin(), uniq.end(), col[i]) - uniq.begin());
    values_[j] = std::move(uniq);
  }
}

ProductKde::ProductKde(std::size_t dim, std::size_t count, std::vector<double> centers_by_dim,
                       std::vector<double> bandwidths)
    : count_(count), centers_(std::move(centers_by_dim)), bandwidths_(std::move(bandwidths)) {
  if (dim == 0) throw ShapeError("product kde needs dimension >= 1");
  if (count_ == 0) throw EmptyBlock("product kde needs at least one sample");
  if (bandwidths_.size() != dim || centers_.size() != dim * count_)
    throw ShapeError("product kde buffers do not match dim*count");
  inv_two_var_.resize(dim);
  log_norm_.resize(dim);
  const double log_count = std::log(static_cast<double>(count_));
  for (std::size_t j = 0; j < dim; ++j) {
    const double sigma = bandwidths_[j];
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw InvalidConfig("product kde bandwidths must be positive");
    inv_two_var_[j] = 0.5 / (sigma * sigma);
    log_norm_[j] = -log_count - (std::log(sigma) + 0.5 * kLogTwoPi);
  }
}

Kde1D ProductKde::marginal(std::size_t j) const {
  auto c = centers(j);
  return Kde1D(std::vector<double>(c.begin(), c.end()), bandwidths_[j]);
}

double ProductKde::log_marginal(std::size_t j, double x) const {
  return log_norm_[j] + simd::log_sum_gauss(centers(j), x, inv_two_var_[j]);
}

double ProductKde::log_pdf(std::span<const double> x) const {
  require_dim(dim(), x.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < dim(); ++j) acc += log_marginal(j, x[j]);
  return acc;
}

void ProductKde::log_pdf_batch(const ColumnCodebook& book, std::span<double> out) const {
  require_dim(dim(), book.dim());
  if (out.size() != book.rows()) throw ShapeError("output span does not match row count");
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> table;
  for (std::size_t j = 0; j < dim(); ++j) {
    const auto vals = book.values(j);
    table.resize(vals.size());
    for (std::size_t u = 0; u < vals.size(); ++u) table[u] = log_marginal(j, vals[u]);
    const auto codes = book.codes(j);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += table[codes[i]];
  }
}

std::size_t density_dim(const Density& density) {
  return std::visit([](const auto& d) { return d.dim(); }, density);
}

double log_pdf(const Density& density, std::span<const double> x) {
  return std::visit([&](const auto& d) { return d.log_pdf(x); }, density);
}

void log_pdf_batch(const Density& density, const Dataset& data, const ColumnCodebook* book,
                   std::span<double> out) {
  require_dim(density_dim(density), data.dim());
  if (out.size() != data.size()) throw ShapeError("output span does not match row count");
  if (const auto* kde = std::get_if<ProductKde>(&density); kde && book) {
    if (book->rows() != data.size()) throw ShapeError("codebook does not match dataset");
    kde->log_pdf_batch(*book, out);
    return;
  }
  if (const auto* g = std::get_if<GaussianDensity>(&density)) {
    g->log_pdf_batch(data, out);
    return;
  }
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = log_pdf(density, data.row(i));
}

GaussianDensity fit_gaussian(const Dataset& samples, std::span<const std::size_t> rows) {
  const std::size_t r = rows.size();
  if (r == 0) throw EmptyBlock("cannot fit a gaussian to an empty block");
  const std::size_t d = samples.dim();
  const auto di = static_cast<Eigen::Index>(d);
  // Columns are the block's points.
  Eigen::MatrixXd centred(di, static_cast<Eigen::Index>(r));
  for (std::size_t s = 0; s < r; ++s) {
    auto x = samples.row(rows[s]);
    for (std::size_t j = 0; j < d; ++j) centred(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s)) = x[j];
  }
  const Eigen::VectorXd mean = centred.rowwise().mean();
  centred.colwise() -= mean;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(di, di);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centred, 1.0 / static_cast<double>(r));
  for (Eigen::Index a = 0; a < di; ++a) {
    for (Eigen::Index b = 0; b < a; ++b) cov(b, a) = cov(a, b);
    cov(a, a) += kCovarianceRegularizer;
  }
  return GaussianDensity(std::move(mean), std::move(cov));
}

GaussianDensity fit_gaussian(const Dataset& samples) {
  const auto rows = all_rows(samples);
  return fit_gaussian(samples, rows);
}

double silverman_bandwidth(std::span<const double> values) {
  if (values.empty()) throw EmptyBlock("bandwidth rule needs at least one value");
  const double r = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= r;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / r);
  if (sd < kBandwidthFloor) sd = kBandwidthFloor;
  return kSilvermanConstant * sd * std::pow(r, -0.2);
}

ProductKde fit_product_kde(const Dataset& samples, std::span<const std::size_t> rows) {
  const std::size_t r = rows.size();
  if (r == 0) throw EmptyBlock("cannot fit a product kde to an empty block");
  const std::size_t d = samples.dim();
  std::vector<double> centers(d * r);
  const auto values = samples.values();
  for (std::size_t s = 0; s < r; ++s) {
    const double* x = values.data() + rows[s] * d;
    for (std::size_t j = 0; j < d; ++j) centers[j * r + s] = x[j];
  }
  std::vector<double> bandwidths(d);
  for (std::size_t j = 0; j < d; ++j)
    bandwidths[j] = silverman_bandwidth(std::span<const double>(centers.data() + j * r, r));
  return ProductKde(d, r, std::move(centers), std::move(bandwidths));
}

ProductKde fit_product_kde(const Dataset& samples) {
  const auto rows = all_rows(samples);
  return fit_product_kde(samples, rows);
}

Density fit_density(EstimatorKind kind, const Dataset& samples, std::span<const std::size_t> rows) {
  switch (kind) {
  case EstimatorKind::gaussian:
    return fit_gaussian(samples, rows);
  case EstimatorKind::product_kde:
    return fit_product_kde(samples, rows);
  }
  throw InvalidConfig("unknown estimator kind");
}

namespace {

double gaussian_cross(const GaussianDensity& a, const GaussianDensity& b) {
  require_dim(a.dim(), b.dim());
  const GaussianDensity joint(b.mean(), a.covariance() + b.covariance());
  const Eigen::VectorXd& mu = a.mean();
  return std::exp(joint.log_pdf(std::span<const double>(mu.data(), a.dim())));
}

double kde_cross(const ProductKde& a, const ProductKde& b) {
  require_dim(a.dim(), b.dim());
  const double log_counts =
      std::log(static_cast<double>(a.count())) + std::log(static_cast<double>(b.count()));
  std::vector<double> terms(a.count());
  double log_total = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j) {
    const double var = a.bandwidth(j) * a.bandwidth(j) + b.bandwidth(j) * b.bandwidth(j);
    const double inv_two_var = 0.5 / var;
    const auto cb = b.centers(j);
    const auto ca = a.centers(j);
    for (std::size_t s = 0; s < ca.size(); ++s)
      terms[s] = simd::log_sum_gauss(cb, ca[s], inv_two_var);
    log_total += log_sum_exp(terms) - log_counts - 0.5 * (std::log(var) + kLogTwoPi);
  }
  return std::exp(log_total);
}

} // namespace

double exact_l2_cross(const Density& a, const Density& b) {
  if (const auto* ga = std::get_if<GaussianDensity>(&a))
    if (const auto* gb = std::get_if<GaussianDensity>(&b)) return gaussian_cross(*ga, *gb);
  if (const auto* ka = std::get_if<ProductKde>(&a))
    if (const auto* kb = std::get_if<ProductKde>(&b)) return kde_cross(*ka, *kb);
  throw NoClosedForm("no closed-form L2 inner product for this density pair");
}

} // namespace pmode
