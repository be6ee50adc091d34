#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmode/eval.hpp"
#include "pmode/io.hpp"
#include "pmode/optimizer.hpp"

namespace pmode {

const char* version();

// ---- one-vs-rest anomaly detection -------------------------------------------

struct AnomalyConfig {
  int class_label = 0;
  std::size_t k = 20;
  std::size_t estimation = 1200;
  std::size_t validation = 3800;
  PerturbSchedule schedule;
  bool naive_bayes = true;  // also score the k = 1 baseline on the full training set
  std::uint64_t seed = 0;
};

struct AnomalyResult {
  std::uint64_t seed = 0;
  int class_label = 0;
  std::size_t k = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double auroc = 0.0;
  std::optional<double> naive_bayes_auroc;
  std::uint64_t evaluations = 0;
  std::uint64_t rounds = 0;
  std::size_t accepted = 0;
  double wall_secs = 0.0;
  std::vector<double> nominal_scores;
  std::vector<double> anomalous_scores;
};

AnomalyResult run_anomaly_experiment(const CifarSplit& data, const AnomalyConfig& cfg);

// ---- Gaussian mixture benchmark ----------------------------------------------

struct GmmConfig {
  std::size_t k = 2;
  std::size_t train = 120;  // rows used for fitting; the rest are the test set
  std::size_t runs = 30;
  bool with_l2 = true;
  std::size_t em_max_iterations = 1000;
  double em_tolerance = 1e-6;
  std::uint64_t seed = 0;
};

struct GmmRun {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  double em = 0.0;  // mean test log-likelihood per method
  double kl_pmode = 0.0;
  std::optional<double> l2_pmode;
  std::size_t em_iterations = 0;
  std::uint64_t kl_evaluations = 0;
  std::uint64_t l2_evaluations = 0;
};

struct GmmReport {
  std::vector<GmmRun> runs;
  WilcoxonResult kl_vs_em;
  std::optional<WilcoxonResult> l2_vs_em;
};

GmmReport run_gmm_experiment(const Dataset& data, const GmmConfig& cfg);

// ---- search oracle ------------------------------------------------------------

// Estimation {-10, -9, 9, 10}, validation {-9.5, 9.5}, one dimension.
SplitPair four_point_instance();

// Schedule used for the climber trials on the four-point instance: with m = 4
// every rate of the default ladder moves a single point.
PerturbSchedule four_point_schedule();

struct OracleConfig {
  std::size_t instances = 50;
  std::size_t max_m = 10;
  std::size_t max_k = 3;
  std::size_t four_point_trials = 100;
  std::uint64_t seed = 0;
};

struct OracleInstance {
  std::size_t m = 0;
  std::size_t k = 0;
  std::size_t dim = 0;
  LossKind loss = LossKind::kl;
  double optimum = 0.0;
  double initial = 0.0;
  double greedy = 0.0;
  double perturb = 0.0;
  bool greedy_local_min = false;
};

struct OracleReport {
  std::vector<OracleInstance> instances;
  std::size_t dominance_failures = 0;   // a climber beat the exhaustive optimum
  std::size_t local_min_failures = 0;   // a greedy terminal state had an improving move
  std::size_t ordering_failures = 0;    // not exhaustive <= greedy <= initial
  double four_point_optimum = 0.0;
  std::size_t four_point_perturb_hits = 0;
  std::size_t four_point_greedy_hits = 0;
  std::size_t four_point_trials = 0;
};

// True when no single relabeling strictly lowers the loss.
bool is_local_minimum(const PartitionObjective& objective, const Assignment& a, double loss);

OracleReport run_oracle_check(const OracleConfig& cfg);

// ---- pairwise Scheffe selection --------------------------------------------------

struct ScheffeDemoConfig {
  double true_mean = 0.0;
  double first_mean = 0.5;
  double second_mean = 6.0;
  std::size_t samples = 10000;
  std::size_t mc_samples = 200000;
  std::size_t trials = 100;
  double lower = -12.0;
  double upper = 18.0;
  std::uint64_t seed = 0;
};

struct ScheffeDemoReport {
  std::size_t first_selected = 0;
  std::size_t trials = 0;
  std::vector<ScheffeReport> reports;
};

ScheffeDemoReport run_scheffe_demo(const ScheffeDemoConfig& cfg);

// ---- JSON ---------------------------------------------------------------------

nlohmann::json to_json(const PerturbSchedule& s);
nlohmann::json to_json(const AnomalyConfig& cfg);
nlohmann::json to_json(const AnomalyResult& r, bool include_scores = false);
nlohmann::json to_json(const GmmConfig& cfg);
nlohmann::json to_json(const GmmRun& r);
nlohmann::json to_json(const WilcoxonResult& w);
nlohmann::json to_json(const OracleConfig& cfg);
nlohmann::json to_json(const OracleReport& r);
nlohmann::json to_json(const ScheffeDemoConfig& cfg);
nlohmann::json to_json(const ScheffeDemoReport& r);

// Aggregate table: one row per method with the median paired difference to EM.
std::string gmm_summary_csv(const GmmConfig& cfg, const GmmReport& report);

} // namespace pmode
