#include "pmode/baselines.hpp"

#include <cmath>
#include <limits>

#include "pmode/error.hpp"
#include "pmode/optimizer.hpp"

namespace pmode {

void EmConfig::validate() const {
  if (k == 0) throw InvalidConfig("EM needs k >= 1");
  if (max_iterations == 0) throw InvalidConfig("EM needs max_iterations >= 1");
  if (!(tolerance > 0.0)) throw InvalidConfig("EM tolerance must be positive");
  if (!(regularizer >= 0.0)) throw InvalidConfig("EM regularizer must be nonnegative");
}

namespace {

struct Params {
  std::vector<double> weights;
  std::vector<GaussianDensity> components;
};

// Weighted MLE update from an n x k responsibility matrix (row-major).
Params m_step(const Dataset& data, const std::vector<double>& resp, std::size_t k, double reg) {
  const std::size_t n = data.size();
  const auto d = static_cast<Eigen::Index>(data.dim());
  // Floor mirrors the reference implementation and keeps empty components finite.
  const double floor = 10.0 * std::numeric_limits<double>::epsilon();
  Params p;
  p.weights.resize(k);
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double nk = floor;
    for (std::size_t i = 0; i < n; ++i) nk += resp[i * k + j];
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = data.row(i);
      const double r = resp[i * k + j];
      for (Eigen::Index t = 0; t < d; ++t) mean[t] += r * x[static_cast<std::size_t>(t)];
    }
    mean /= nk;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd diff(d);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = data.row(i);
      const double r = resp[i * k + j];
      for (Eigen::Index t = 0; t < d; ++t) diff[t] = x[static_cast<std::size_t>(t)] - mean[t];
      for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b <= a; ++b) cov(a, b) += r * diff[a] * diff[b];
    }
    cov /= nk;
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = 0; b < a; ++b) cov(b, a) = cov(a, b);
      cov(a, a) += reg;
    }
    p.components.emplace_back(std::move(mean), std::move(cov));
    p.weights[j] = nk;
    total += nk;
  }
  for (auto& w : p.weights) w /= total;
  return p;
}

// Fills responsibilities and returns the mean log-likelihood.
double e_step(const Dataset& data, const Params& p, std::vector<double>& resp, double& worst) {
  const std::size_t n = data.size();
  const std::size_t k = p.weights.size();
  std::vector<double> terms(k);
  std::vector<double> scratch(k);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = data.row(i);
    for (std::size_t j = 0; j < k; ++j)
      terms[j] = std::log(p.weights[j]) + p.components[j].log_pdf(x);
    scratch = terms;
    const double lse = log_sum_exp(scratch);
    double row = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      resp[i * k + j] = std::exp(terms[j] - lse);
      row += resp[i * k + j];
    }
    worst = std::max(worst, std::abs(row - 1.0));
    total += lse;
  }
  return total / static_cast<double>(n);
}

} // namespace

EmResult em_fit_gmm(const Dataset& data, const EmConfig& cfg) {
  cfg.validate();
  if (data.size() < cfg.k) throw InvalidConfig("EM needs at least k samples");
  const std::size_t n = data.size();
  const std::size_t k = cfg.k;

  const Assignment init = kmeans_init(data, k, cfg.seed);
  std::vector<double> resp(n * k, 0.0);
  for (std::size_t i = 0; i < n; ++i) resp[i * k + init[i]] = 1.0;
  Params params = m_step(data, resp, k, cfg.regularizer);

  EmResult result{MixtureDensity::single(params.components.front()), {}, 0, false, 0.0};
  double previous = -std::numeric_limits<double>::infinity();
  for (std::size_t iter = 1; iter <= cfg.max_iterations; ++iter) {
    const double ll = e_step(data, params, resp, result.responsibility_error);
    result.log_likelihood.push_back(ll);
    params = m_step(data, resp, k, cfg.regularizer);
    result.iterations = iter;
    if (std::abs(ll - previous) < cfg.tolerance) {
      result.converged = true;
      break;
    }
    previous = ll;
  }

  std::vector<MixtureDensity::ComponentPtr> comps;
  comps.reserve(k);
  for (auto& g : params.components) comps.push_back(std::make_shared<const Density>(std::move(g)));
  result.mixture = MixtureDensity(params.weights, std::move(comps));
  return result;
}

MixtureDensity naive_bayes_fit(const Dataset& data) {
  if (data.empty()) throw EmptyBlock("naive Bayes needs at least one sample");
  return MixtureDensity::single(fit_product_kde(data));
}

} // namespace pmode
