#include "pmode/experiments.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "pmode/baselines.hpp"
#include "pmode/error.hpp"
#include "pmode/parallel.hpp"
#include "pmode/rng.hpp"

#ifndef PMODE_VERSION
#define PMODE_VERSION "unknown"
#endif

namespace pmode {

const char* version() { return PMODE_VERSION; }

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Assignment random_assignment(std::size_t m, std::size_t k, Rng& rng) {
  std::vector<std::uint32_t> labels(m);
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng.index(k));
  return Assignment(std::move(labels), k);
}

} // namespace

AnomalyResult run_anomaly_experiment(const CifarSplit& data, const AnomalyConfig& cfg) {
  if (cfg.k == 0) throw InvalidConfig("k must be at least 1");
  if (cfg.estimation < cfg.k) throw InvalidConfig("estimation size must be at least k");
  if (cfg.validation == 0) throw InvalidConfig("validation size must be positive");
  if (cfg.estimation + cfg.validation > data.train.size())
    throw InvalidConfig("estimation + validation exceeds the " + std::to_string(data.train.size()) +
                        " training rows");
  if (data.test_nominal.empty() || data.test_anomalous.empty())
    throw InvalidConfig("test set needs nominal and anomalous rows");
  if (data.test_nominal.dim() != data.train.dim() || data.test_anomalous.dim() != data.train.dim())
    throw ShapeError("test dimension differs from training dimension");
  cfg.schedule.validate();

  const auto t0 = Clock::now();
  AnomalyResult r;
  r.seed = cfg.seed;
  r.class_label = cfg.class_label;
  r.k = cfg.k;

  const SplitPair split = split_dataset_sizes(data.train, cfg.estimation, cfg.validation, cfg.seed);
  const PartitionObjective objective(split, cfg.k, EstimatorKind::product_kde, LossKind::kl);
  const Assignment init = kmeans_init(split.estimation, cfg.k, derive_seed(cfg.seed, 1, 0));
  const SearchState start = objective.evaluate(init);
  const SearchState best = perturbation_climb(objective, start, cfg.schedule, derive_seed(cfg.seed, 2, 0));
  r.initial_loss = start.loss;
  r.final_loss = best.loss;
  r.evaluations = best.evaluations;
  r.rounds = best.rounds;
  r.accepted = best.accepted_losses.size() - 1;

  const ColumnCodebook nominal_book(data.test_nominal);
  const ColumnCodebook anomalous_book(data.test_anomalous);
  r.nominal_scores = anomaly_scores(best.mixture, data.test_nominal, &nominal_book);
  r.anomalous_scores = anomaly_scores(best.mixture, data.test_anomalous, &anomalous_book);
  r.auroc = auroc(r.anomalous_scores, r.nominal_scores);

  if (cfg.naive_bayes) {
    const MixtureDensity nb = naive_bayes_fit(data.train);
    r.naive_bayes_auroc = auroc(anomaly_scores(nb, data.test_anomalous, &anomalous_book),
                                anomaly_scores(nb, data.test_nominal, &nominal_book));
  }
  r.wall_secs = seconds_since(t0);
  return r;
}

GmmReport run_gmm_experiment(const Dataset& data, const GmmConfig& cfg) {
  if (cfg.k == 0) throw InvalidConfig("k must be at least 1");
  if (cfg.runs == 0) throw InvalidConfig("runs must be positive");
  if (cfg.train < cfg.k || cfg.train >= data.size())
    throw InvalidConfig("train size must be in [k, n) for n = " + std::to_string(data.size()));
  EmConfig em_cfg{cfg.k, cfg.em_max_iterations, cfg.em_tolerance, kCovarianceRegularizer, 0};
  em_cfg.validate();
  if (cfg.with_l2) check_l2_dimension(data.dim());

  GmmReport report;
  report.runs.resize(cfg.runs);
  parallel_for(cfg.runs, [&](std::size_t r) {
    GmmRun& out = report.runs[r];
    out.run = r;
    out.seed = derive_seed(cfg.seed, r, 0);
    const SplitPair split = split_dataset_sizes(data, cfg.train, data.size() - cfg.train, out.seed);
    const Dataset& train = split.estimation;
    const Dataset& test = split.validation;

    EmConfig em = em_cfg;
    em.seed = out.seed;
    const EmResult fitted = em_fit_gmm(train, em);
    out.em = mean_test_log_likelihood(fitted.mixture, test);
    out.em_iterations = fitted.iterations;

    const Assignment init = kmeans_init(train, cfg.k, out.seed);
    const PartitionObjective kl(train, train, cfg.k, EstimatorKind::gaussian, LossKind::kl);
    const SearchState kl_best = greedy_hill_climb(kl, kl.evaluate(init));
    out.kl_pmode = mean_test_log_likelihood(kl_best.mixture, test);
    out.kl_evaluations = kl_best.evaluations;

    if (cfg.with_l2) {
      const PartitionObjective l2(train, train, cfg.k, EstimatorKind::gaussian, LossKind::l2);
      const SearchState l2_best = greedy_hill_climb(l2, l2.evaluate(init));
      out.l2_pmode = mean_test_log_likelihood(l2_best.mixture, test);
      out.l2_evaluations = l2_best.evaluations;
    }
  });

  std::vector<double> em, kl, l2;
  for (const auto& run : report.runs) {
    em.push_back(run.em);
    kl.push_back(run.kl_pmode);
    if (run.l2_pmode) l2.push_back(*run.l2_pmode);
  }
  report.kl_vs_em = wilcoxon_signed_rank(kl, em);
  if (cfg.with_l2) report.l2_vs_em = wilcoxon_signed_rank(l2, em);
  return report;
}

SplitPair four_point_instance() {
  return {Dataset(4, 1, {-10.0, -9.0, 9.0, 10.0}, {}, "four-point"),
          Dataset(2, 1, {-9.5, 9.5}, {}, "four-point-validation"), 0};
}

PerturbSchedule four_point_schedule() {
  PerturbSchedule s;
  s.rates = {1.0, 0.5, 0.25};
  s.patience = 50;
  s.width = 10;
  s.budget_secs = 60.0;
  return s;
}

bool is_local_minimum(const PartitionObjective& objective, const Assignment& a, double loss) {
  Assignment probe = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::uint32_t to = 0; to < a.k(); ++to) {
      if (to == a[i]) continue;
      probe.set(i, to);
      const bool better = objective.loss(probe) < loss;
      probe.set(i, a[i]);
      if (better) return false;
    }
  }
  return true;
}

OracleReport run_oracle_check(const OracleConfig& cfg) {
  if (cfg.max_m < 4) throw InvalidConfig("max_m must be at least 4");
  if (cfg.max_k == 0) throw InvalidConfig("max_k must be at least 1");
  {
    // Refuse before any work when the largest instance is beyond the oracle.
    double worst = 1.0;
    for (std::size_t i = 0; i < cfg.max_m; ++i) worst *= static_cast<double>(cfg.max_k);
    if (worst > static_cast<double>(kDefaultExhaustiveCap))
      throw TooLarge("max_k^max_m exceeds the exhaustive search cap");
  }

  PerturbSchedule sched;
  sched.rates = {0.5, 0.25, 0.1};
  sched.patience = 20;
  sched.width = 8;
  sched.budget_secs = std::numeric_limits<double>::infinity();
  sched.max_rounds = 5000;

  OracleReport report;
  report.instances.resize(cfg.instances);
  parallel_for(cfg.instances, [&](std::size_t idx) {
    Rng rng(derive_seed(cfg.seed, idx, 0));
    OracleInstance& inst = report.instances[idx];
    inst.m = 4 + rng.index(cfg.max_m - 3);
    inst.k = 1 + rng.index(cfg.max_k);
    inst.dim = 1 + rng.index(2);
    inst.loss = idx % 2 == 0 ? LossKind::kl : LossKind::l2;

    const std::size_t clumps = 1 + rng.index(3);
    std::vector<double> centers(clumps * inst.dim);
    for (auto& c : centers) c = rng.uniform(-8.0, 8.0);
    auto draw = [&](std::size_t n) {
      std::vector<double> v(n * inst.dim);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = rng.index(clumps);
        for (std::size_t j = 0; j < inst.dim; ++j)
          v[i * inst.dim + j] = centers[c * inst.dim + j] + rng.normal();
      }
      return Dataset(n, inst.dim, std::move(v));
    };
    Dataset est = draw(inst.m);
    Dataset val = draw(8);

    const PartitionObjective objective(std::move(est), std::move(val), inst.k, EstimatorKind::gaussian,
                                       inst.loss);
    inst.optimum = exhaustive_pmode(objective).loss;
    const SearchState start = objective.evaluate(random_assignment(inst.m, inst.k, rng));
    inst.initial = start.loss;
    const SearchState greedy = greedy_hill_climb(objective, start);
    inst.greedy = greedy.loss;
    inst.greedy_local_min = is_local_minimum(objective, greedy.assignment, greedy.loss);
    inst.perturb = perturbation_climb(objective, start, sched, derive_seed(cfg.seed, idx, 1)).loss;
  });
  for (const auto& inst : report.instances) {
    if (inst.greedy < inst.optimum || inst.perturb < inst.optimum) ++report.dominance_failures;
    if (!inst.greedy_local_min) ++report.local_min_failures;
    if (!(inst.optimum <= inst.greedy && inst.greedy <= inst.initial)) ++report.ordering_failures;
  }

  const PartitionObjective four(four_point_instance(), 2, EstimatorKind::gaussian, LossKind::kl);
  report.four_point_optimum = exhaustive_pmode(four).loss;
  report.four_point_trials = cfg.four_point_trials;
  std::vector<char> perturb_hit(cfg.four_point_trials, 0), greedy_hit(cfg.four_point_trials, 0);
  parallel_for(cfg.four_point_trials, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t, 2));
    const SearchState start = four.evaluate(random_assignment(4, 2, rng));
    const double p = perturbation_climb(four, start, four_point_schedule(), derive_seed(cfg.seed, t, 3)).loss;
    const double g = greedy_hill_climb(four, start).loss;
    perturb_hit[t] = p <= report.four_point_optimum;
    greedy_hit[t] = g <= report.four_point_optimum;
  });
  for (std::size_t t = 0; t < cfg.four_point_trials; ++t) {
    report.four_point_perturb_hits += static_cast<std::size_t>(perturb_hit[t]);
    report.four_point_greedy_hits += static_cast<std::size_t>(greedy_hit[t]);
  }
  return report;
}

ScheffeDemoReport run_scheffe_demo(const ScheffeDemoConfig& cfg) {
  if (cfg.samples == 0 || cfg.trials == 0 || cfg.mc_samples == 0)
    throw InvalidConfig("samples, mc_samples and trials must be positive");
  const auto unit_normal = [](double mean) {
    return Density(GaussianDensity(Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Identity(1, 1)));
  };
  const Density f = unit_normal(cfg.first_mean);
  const Density g = unit_normal(cfg.second_mean);

  ScheffeDemoReport out;
  out.trials = cfg.trials;
  out.reports.resize(cfg.trials);
  parallel_for(cfg.trials, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t, 0));
    std::vector<double> x(cfg.samples);
    for (auto& v : x) v = rng.normal(cfg.true_mean, 1.0);
    const Dataset samples(cfg.samples, 1, std::move(x));
    MonteCarloConfig mc{cfg.mc_samples, {cfg.lower}, {cfg.upper}, derive_seed(cfg.seed, t, 1)};
    out.reports[t] = scheffe_compare(f, g, samples, mc);
  });
  for (const auto& r : out.reports)
    if (r.choice == ScheffeChoice::first) ++out.first_selected;
  return out;
}

// ---- JSON -----------------------------------------------------------------------

nlohmann::json to_json(const PerturbSchedule& s) {
  nlohmann::json j{{"rates", s.rates}, {"patience", s.patience}, {"width", s.width},
                   {"budget_secs", s.budget_secs}};
  j["max_rounds"] = s.max_rounds ? nlohmann::json(*s.max_rounds) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const AnomalyConfig& cfg) {
  return {{"class", cfg.class_label},   {"k", cfg.k},
          {"estimation", cfg.estimation}, {"validation", cfg.validation},
          {"schedule", to_json(cfg.schedule)}, {"naive_bayes", cfg.naive_bayes},
          {"seed", cfg.seed}};
}

nlohmann::json to_json(const AnomalyResult& r, bool include_scores) {
  nlohmann::json j{{"seed", r.seed},
                   {"class", r.class_label},
                   {"k", r.k},
                   {"initial_loss", r.initial_loss},
                   {"final_loss", r.final_loss},
                   {"auroc", r.auroc},
                   {"evaluations", r.evaluations},
                   {"rounds", r.rounds},
                   {"accepted", r.accepted},
                   {"wall_secs", r.wall_secs}};
  j["naive_bayes_auroc"] = r.naive_bayes_auroc ? nlohmann::json(*r.naive_bayes_auroc) : nlohmann::json(nullptr);
  if (include_scores) {
    j["nominal_scores"] = r.nominal_scores;
    j["anomalous_scores"] = r.anomalous_scores;
  }
  return j;
}

nlohmann::json to_json(const GmmConfig& cfg) {
  return {{"k", cfg.k},
          {"train", cfg.train},
          {"runs", cfg.runs},
          {"with_l2", cfg.with_l2},
          {"em_max_iterations", cfg.em_max_iterations},
          {"em_tolerance", cfg.em_tolerance},
          {"seed", cfg.seed}};
}

nlohmann::json to_json(const GmmRun& r) {
  nlohmann::json j{{"run", r.run},
                   {"seed", r.seed},
                   {"em", r.em},
                   {"kl_pmode", r.kl_pmode},
                   {"em_iterations", r.em_iterations},
                   {"kl_evaluations", r.kl_evaluations}};
  if (r.l2_pmode) {
    j["l2_pmode"] = *r.l2_pmode;
    j["l2_evaluations"] = r.l2_evaluations;
  }
  return j;
}

nlohmann::json to_json(const WilcoxonResult& w) {
  return {{"median_difference", w.median_difference}, {"p_value", w.p_value},
          {"w_plus", w.w_plus}, {"w_minus", w.w_minus},
          {"effective_n", w.effective_n}, {"exact", w.exact}};
}

nlohmann::json to_json(const OracleConfig& cfg) {
  return {{"instances", cfg.instances}, {"max_m", cfg.max_m}, {"max_k", cfg.max_k},
          {"four_point_trials", cfg.four_point_trials}, {"seed", cfg.seed}};
}

nlohmann::json to_json(const OracleReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& i : r.instances)
    rows.push_back({{"m", i.m}, {"k", i.k}, {"dim", i.dim},
                    {"loss", i.loss == LossKind::kl ? "kl" : "l2"},
                    {"optimum", i.optimum}, {"initial", i.initial}, {"greedy", i.greedy},
                    {"perturb", i.perturb}, {"greedy_local_min", i.greedy_local_min}});
  return {{"instances", rows},
          {"dominance_failures", r.dominance_failures},
          {"local_min_failures", r.local_min_failures},
          {"ordering_failures", r.ordering_failures},
          {"four_point_optimum", r.four_point_optimum},
          {"four_point_perturb_hits", r.four_point_perturb_hits},
          {"four_point_greedy_hits", r.four_point_greedy_hits},
          {"four_point_trials", r.four_point_trials}};
}

nlohmann::json to_json(const ScheffeDemoConfig& cfg) {
  return {{"true_mean", cfg.true_mean}, {"first_mean", cfg.first_mean},
          {"second_mean", cfg.second_mean}, {"samples", cfg.samples},
          {"mc_samples", cfg.mc_samples}, {"trials", cfg.trials},
          {"lower", cfg.lower}, {"upper", cfg.upper}, {"seed", cfg.seed}};
}

nlohmann::json to_json(const ScheffeDemoReport& r) {
  return {{"first_selected", r.first_selected}, {"trials", r.trials}};
}

std::string gmm_summary_csv(const GmmConfig& cfg, const GmmReport& report) {
  std::vector<double> em, kl, l2;
  for (const auto& run : report.runs) {
    em.push_back(run.em);
    kl.push_back(run.kl_pmode);
    if (run.l2_pmode) l2.push_back(*run.l2_pmode);
  }
  std::ostringstream os;
  os.precision(17);
  os << "method,k,runs,median_test_ll,median_diff_vs_em,p_value\n";
  os << "em," << cfg.k << ',' << report.runs.size() << ',' << median(em) << ",,\n";
  os << "kl_pmode," << cfg.k << ',' << report.runs.size() << ',' << median(kl) << ','
     << report.kl_vs_em.median_difference << ',' << report.kl_vs_em.p_value << '\n';
  if (report.l2_vs_em)
    os << "l2_pmode," << cfg.k << ',' << report.runs.size() << ',' << median(l2) << ','
       << report.l2_vs_em->median_difference << ',' << report.l2_vs_em->p_value << '\n';
  return os.str();
}

} // namespace pmode
