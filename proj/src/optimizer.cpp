#include "pmode/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "pmode/error.hpp"
#include "pmode/parallel.hpp"
#include "pmode/rng.hpp"

namespace pmode {

void PerturbSchedule::validate() const {
  if (rates.empty()) throw InvalidConfig("perturbation schedule needs at least one rate");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!(rates[i] > 0.0 && rates[i] <= 1.0))
      throw InvalidConfig("perturbation rates must lie in (0, 1]");
    if (i > 0 && !(rates[i] < rates[i - 1]))
      throw InvalidConfig("perturbation rates must be strictly decreasing");
  }
  if (patience == 0) throw InvalidConfig("patience must be at least 1");
  if (width == 0) throw InvalidConfig("width must be at least 1");
  if (std::isnan(budget_secs)) throw InvalidConfig("budget must be a number");
}

PartitionObjective::PartitionObjective(Dataset estimation, Dataset validation, std::size_t k,
                                       EstimatorKind estimator, LossKind loss)
    : estimation_(std::move(estimation)), validation_(std::move(validation)), k_(k),
      estimator_(estimator), loss_(loss) {
  if (k_ == 0) throw InvalidConfig("k must be at least 1");
  if (estimation_.empty()) throw InvalidConfig("estimation set is empty");
  if (validation_.empty()) throw InvalidConfig("validation set is empty");
  if (estimation_.dim() != validation_.dim())
    throw ShapeError("estimation and validation sets differ in dimension");
  if (loss_ == LossKind::l2) check_l2_dimension(validation_.dim());
  if (estimator_ == EstimatorKind::product_kde) codebook_.emplace(validation_);
}

PartitionObjective::PartitionObjective(const SplitPair& split, std::size_t k,
                                       EstimatorKind estimator, LossKind loss)
    : PartitionObjective(split.estimation, split.validation, k, estimator, loss) {}

void PartitionObjective::check_assignment(const Assignment& a) const {
  if (a.size() != m())
    throw ShapeError("assignment length " + std::to_string(a.size()) +
                     " does not match estimation size " + std::to_string(m()));
  if (a.k() != k_) throw InvalidConfig("assignment k does not match objective k");
}

PartitionObjective::BlockPtr
PartitionObjective::fit_block(std::span<const std::size_t> members) const {
  auto block = std::make_shared<Block>();
  block->count = members.size();
  if (members.empty()) return block;
  block->density = std::make_shared<const Density>(fit_density(estimator_, estimation_, members));
  block->log_pdf.resize(validation_.size());
  log_pdf_batch(*block->density, validation_, codebook_ ? &*codebook_ : nullptr, block->log_pdf);
  return block;
}

void PartitionObjective::refresh_cross(Model& model, std::span<const std::uint32_t> labels) const {
  if (loss_ != LossKind::l2) return;
  model.cross.resize(k_ * k_, 0.0);
  for (std::uint32_t c : labels) {
    for (std::size_t b = 0; b < k_; ++b) {
      const std::size_t lo = std::min<std::size_t>(c, b);
      const std::size_t hi = std::max<std::size_t>(c, b);
      const auto& blo = model.blocks[lo];
      const auto& bhi = model.blocks[hi];
      model.cross[lo * k_ + hi] =
          (blo->count > 0 && bhi->count > 0) ? exact_l2_cross(*blo->density, *bhi->density) : 0.0;
    }
  }
}

double PartitionObjective::compute_loss(const Model& model) const {
  std::vector<double> weights(k_);
  std::vector<std::span<const double>> views(k_);
  const double mm = static_cast<double>(m());
  for (std::size_t j = 0; j < k_; ++j) {
    weights[j] = static_cast<double>(model.blocks[j]->count) / mm;
    views[j] = model.blocks[j]->log_pdf;
  }
  std::vector<double> mix(validation_.size());
  combine_log_densities(weights, views, mix);
  if (loss_ == LossKind::kl) return kl_from_log_densities(mix);
  return l2_from_log_densities(mix, l2_norm_from_cross(weights, model.cross));
}

PartitionObjective::Model PartitionObjective::build(const Assignment& a) const {
  check_assignment(a);
  const auto blocks = a.blocks();
  Model model;
  model.blocks.reserve(k_);
  for (const auto& members : blocks) model.blocks.push_back(fit_block(members));
  std::vector<std::uint32_t> all(k_);
  for (std::size_t j = 0; j < k_; ++j) all[j] = static_cast<std::uint32_t>(j);
  refresh_cross(model, all);
  model.loss = compute_loss(model);
  return model;
}

PartitionObjective::Model PartitionObjective::with_blocks(const Model& base,
                                                          std::span<const std::uint32_t> labels,
                                                          std::span<const BlockPtr> replacements) const {
  Model model = base;
  for (std::size_t i = 0; i < labels.size(); ++i) model.blocks[labels[i]] = replacements[i];
  refresh_cross(model, labels);
  model.loss = compute_loss(model);
  return model;
}

MixtureDensity PartitionObjective::mixture(const Model& model) const {
  std::vector<double> weights(k_);
  std::vector<MixtureDensity::ComponentPtr> comps(k_);
  for (std::size_t j = 0; j < k_; ++j) {
    weights[j] = static_cast<double>(model.blocks[j]->count) / static_cast<double>(m());
    comps[j] = model.blocks[j]->density;
  }
  return MixtureDensity(std::move(weights), std::move(comps));
}

SearchState PartitionObjective::evaluate(const Assignment& a) const {
  const Model model = build(a);
  return SearchState{a, mixture(model), model.loss, 1, 0, {model.loss}};
}

SearchState evaluate_assignment(const Assignment& a, const SplitPair& split,
                                EstimatorKind estimator, const LossSpec& loss) {
  return PartitionObjective(split, a.k(), estimator, loss.kind).evaluate(a);
}

SearchState exhaustive_pmode(const PartitionObjective& objective, std::uint64_t cap) {
  const std::size_t m = objective.m();
  const std::size_t k = objective.k();
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < m; ++i) {
    if (total > cap / k) throw TooLarge("k^m exceeds the exhaustive search cap");
    total *= k;
  }
  if (total > cap) throw TooLarge("k^m exceeds the exhaustive search cap");

  std::vector<std::uint32_t> labels(m, 0);
  std::vector<std::uint32_t> best_labels = labels;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t n = 0; n < total; ++n) {
    const double loss = objective.loss(Assignment(labels, k));
    if (loss < best) {
      best = loss;
      best_labels = labels;
    }
    // Odometer with the last position fastest: lexicographic order.
    for (std::size_t pos = m; pos-- > 0;) {
      if (++labels[pos] < k) break;
      labels[pos] = 0;
    }
  }
  SearchState state = objective.evaluate(Assignment(best_labels, k));
  state.evaluations = total;
  return state;
}

SearchState greedy_hill_climb(const PartitionObjective& objective, const SearchState& start) {
  const std::size_t m = objective.m();
  const std::size_t k = objective.k();
  Assignment current = start.assignment;
  auto model = objective.build(current);
  auto members = current.blocks();
  std::uint64_t evaluations = start.evaluations;
  std::vector<double> trace{model.loss};

  bool improved = k > 1;
  while (improved) {
    improved = false;
    for (std::size_t i = 0; i < m && !improved; ++i) {
      const std::uint32_t from = current[i];
      // The source block without i is the same for every target label.
      std::vector<std::size_t> shrunk;
      shrunk.reserve(members[from].size());
      for (std::size_t idx : members[from])
        if (idx != i) shrunk.push_back(idx);
      const auto shrunk_block = objective.fit_block(shrunk);
      for (std::uint32_t to = 0; to < k && !improved; ++to) {
        if (to == from) continue;
        ++evaluations;
        std::vector<std::size_t> grown = members[to];
        grown.insert(std::lower_bound(grown.begin(), grown.end(), i), i);

        const std::uint32_t labels[2] = {from, to};
        const PartitionObjective::BlockPtr blocks[2] = {shrunk_block, objective.fit_block(grown)};
        auto candidate = objective.with_blocks(model, labels, blocks);
        if (candidate.loss < model.loss) {
          model = std::move(candidate);
          members[from] = std::move(shrunk);
          members[to] = std::move(grown);
          current.set(i, to);
          trace.push_back(model.loss);
          improved = true;
        }
      }
    }
  }
  SearchState out{current, objective.mixture(model), model.loss, evaluations, start.rounds,
                  std::move(trace)};
  return out;
}

namespace {

struct Candidate {
  std::vector<std::uint32_t> labels;
  std::vector<std::uint32_t> changed; // labels whose blocks differ from the current state
};

Candidate draw_candidate(const Assignment& current, std::size_t count, Rng& rng) {
  const std::size_t m = current.size();
  const std::size_t k = current.k();
  Candidate c{current.labels(), {}};
  // Partial Fisher-Yates: the first `count` entries of a random permutation.
  std::vector<std::size_t> pool(m);
  for (std::size_t i = 0; i < m; ++i) pool[i] = i;
  std::vector<bool> touched(k, false);
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t j = t + rng.index(m - t);
    std::swap(pool[t], pool[j]);
    const std::size_t pos = pool[t];
    const auto label = static_cast<std::uint32_t>(rng.index(k));
    if (label != c.labels[pos]) {
      touched[c.labels[pos]] = true;
      touched[label] = true;
      c.labels[pos] = label;
    }
  }
  for (std::uint32_t l = 0; l < k; ++l)
    if (touched[l]) c.changed.push_back(l);
  return c;
}

std::vector<PartitionObjective::BlockPtr> fit_changed(const PartitionObjective& objective,
                                                      const Candidate& c) {
  std::vector<PartitionObjective::BlockPtr> blocks;
  blocks.reserve(c.changed.size());
  std::vector<std::size_t> members;
  for (std::uint32_t l : c.changed) {
    members.clear();
    for (std::size_t i = 0; i < c.labels.size(); ++i)
      if (c.labels[i] == l) members.push_back(i);
    blocks.push_back(objective.fit_block(members));
  }
  return blocks;
}

} // namespace

SearchState perturbation_climb(const PartitionObjective& objective, const SearchState& start,
                               const PerturbSchedule& schedule, std::uint64_t seed) {
  schedule.validate();
  using Clock = std::chrono::steady_clock;
  const auto began = Clock::now();
  const std::size_t m = objective.m();

  Assignment current = start.assignment;
  auto model = objective.build(current);
  std::uint64_t evaluations = start.evaluations;
  std::uint64_t round = start.rounds;
  std::uint64_t rounds_here = 0;
  std::vector<double> trace{model.loss};

  std::size_t rate_index = 0;
  std::size_t stale = 0;
  std::vector<double> losses(schedule.width);
  std::vector<Candidate> candidates(schedule.width);
  std::vector<PartitionObjective::Model> models(schedule.width);

  while (rate_index < schedule.rates.size()) {
    if (schedule.max_rounds && rounds_here >= *schedule.max_rounds) break;
    const double elapsed = std::chrono::duration<double>(Clock::now() - began).count();
    if (elapsed >= schedule.budget_secs) break;

    const double rate = schedule.rates[rate_index];
    const auto count = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(rate * static_cast<double>(m) - 1e-9)), 1, m);

    parallel_for(schedule.width, [&](std::size_t c) {
      Rng rng(derive_seed(seed, round, c));
      candidates[c] = draw_candidate(current, count, rng);
      if (candidates[c].changed.empty()) {
        losses[c] = model.loss;
        return;
      }
      const auto blocks = fit_changed(objective, candidates[c]);
      models[c] = objective.with_blocks(model, candidates[c].changed, blocks);
      losses[c] = models[c].loss;
    });
    evaluations += schedule.width;

    std::size_t best = 0;
    for (std::size_t c = 1; c < schedule.width; ++c)
      if (losses[c] < losses[best]) best = c;

    if (losses[best] < model.loss) {
      model = std::move(models[best]);
      current = Assignment(candidates[best].labels, objective.k());
      trace.push_back(model.loss);
      stale = 0;
    } else if (++stale >= schedule.patience) {
      ++rate_index;
      stale = 0;
    }
    for (auto& mdl : models) mdl = {};
    ++round;
    ++rounds_here;
  }
  return SearchState{current, objective.mixture(model), model.loss, evaluations, round,
                     std::move(trace)};
}

} // namespace pmode
