#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pmode/core.hpp"
#include "pmode/loss.hpp"
#include "pmode/mixture.hpp"

namespace pmode {

/// Rate ladder for the random-perturbation climber.
struct PerturbSchedule {
  std::vector<double> rates{0.05, 0.02, 0.01, 0.001};
  std::size_t patience = 50;  // non-improving rounds before the rate steps down
  std::size_t width = 10;     // candidates per round
  double budget_secs = 1800.0;
  // Optional hard cap on rounds; unlike the wall-clock budget it is reproducible.
  std::optional<std::uint64_t> max_rounds;

  void validate() const;
};

struct SearchState {
  Assignment assignment;
  MixtureDensity mixture;
  double loss;
  std::uint64_t evaluations = 0;
  // Perturbation rounds consumed so far; candidate streams are keyed on it.
  std::uint64_t rounds = 0;
  // Loss at the start followed by the loss after every accepted move.
  std::vector<double> accepted_losses;
};

/// Validation loss of hard partitions of an estimation set.
///
/// Owns the estimation and validation data, the component estimator and the
/// loss. Fitted blocks are cached per label, so a move that relabels a few
/// points refits only the affected blocks; the resulting loss is bit-identical
/// to evaluating the new assignment from scratch.
class PartitionObjective {
public:
  struct Block {
    std::shared_ptr<const Density> density; // null when the block is empty
    std::vector<double> log_pdf;            // log density at each validation row
    std::size_t count = 0;
  };
  using BlockPtr = std::shared_ptr<const Block>;

  struct Model {
    std::vector<BlockPtr> blocks;
    std::vector<double> cross; // k x k inner products (upper triangle), L2 only
    double loss = 0.0;
  };

  PartitionObjective(Dataset estimation, Dataset validation, std::size_t k,
                     EstimatorKind estimator, LossKind loss);
  PartitionObjective(const SplitPair& split, std::size_t k, EstimatorKind estimator,
                     LossKind loss);

  std::size_t k() const { return k_; }
  std::size_t m() const { return estimation_.size(); }
  const Dataset& estimation() const { return estimation_; }
  const Dataset& validation() const { return validation_; }
  EstimatorKind estimator() const { return estimator_; }
  LossKind loss_kind() const { return loss_; }

  SearchState evaluate(const Assignment& a) const;
  double loss(const Assignment& a) const { return build(a).loss; }

  Model build(const Assignment& a) const;
  BlockPtr fit_block(std::span<const std::size_t> members) const;
  // Replaces the listed labels' blocks in `base` and recomputes the loss.
  Model with_blocks(const Model& base, std::span<const std::uint32_t> labels,
                    std::span<const BlockPtr> replacements) const;
  MixtureDensity mixture(const Model& model) const;

private:
  void check_assignment(const Assignment& a) const;
  void refresh_cross(Model& model, std::span<const std::uint32_t> labels) const;
  double compute_loss(const Model& model) const;

  Dataset estimation_;
  Dataset validation_;
  std::size_t k_;
  EstimatorKind estimator_;
  LossKind loss_;
  std::optional<ColumnCodebook> codebook_;
};

SearchState evaluate_assignment(const Assignment& a, const SplitPair& split,
                                EstimatorKind estimator, const LossSpec& loss);

inline constexpr std::uint64_t kDefaultExhaustiveCap = std::uint64_t{1} << 20;

// Minimizes the loss over all k^m assignments; ties keep the
// lexicographically smallest assignment.
SearchState exhaustive_pmode(const PartitionObjective& objective,
                             std::uint64_t cap = kDefaultExhaustiveCap);

/// Lloyd's algorithm with k-means++ seeding.
///
/// Stops after 100 iterations or once no centroid moves more than 1e-8.
/// Every cluster of the result is nonempty.
Assignment kmeans_init(const Dataset& estimation, std::size_t k, std::uint64_t seed);

/// First-improvement single-point relabeling, scanning (point, label) pairs
/// in row-major order and restarting after each accepted move. Returns a
/// state no single relabeling improves.
SearchState greedy_hill_climb(const PartitionObjective& objective, const SearchState& start);

/// Random multi-point perturbation with a descending rate ladder.
SearchState perturbation_climb(const PartitionObjective& objective, const SearchState& start,
                               const PerturbSchedule& schedule, std::uint64_t seed);

} // namespace pmode
