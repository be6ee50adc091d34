// pmode command-line front end.
//
// Every subcommand reads an optional INI file (--config); keys in the section
// named after the subcommand, and global keys the subcommand understands, act
// as defaults that flags on the command line override.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmode/baselines.hpp"
#include "pmode/error.hpp"
#include "pmode/experiments.hpp"
#include "pmode/io.hpp"
#include "pmode/parallel.hpp"
#include "pmode/rng.hpp"

namespace {

using nlohmann::json;
using namespace pmode;

const std::vector<std::string> kCifarNames{"airplane", "automobile", "bird", "cat",  "deer",
                                           "dog",      "frog",       "horse", "ship", "truck"};

const std::map<std::string, LossKind> kLossNames{{"kl", LossKind::kl}, {"l2", LossKind::l2}};
const std::map<std::string, EstimatorKind> kEstimatorNames{{"gaussian", EstimatorKind::gaussian},
                                                           {"kde", EstimatorKind::product_kde}};
enum class OptimizerKind { exhaustive, greedy, perturb };
const std::map<std::string, OptimizerKind> kOptimizerNames{{"exhaustive", OptimizerKind::exhaustive},
                                                           {"greedy", OptimizerKind::greedy},
                                                           {"perturb", OptimizerKind::perturb}};

class Output {
public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw InvalidConfig("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
  std::ofstream file_;
};

void emit(Output& out, const json& record) { out.stream() << record.dump() << '\n'; }

struct ScheduleFlags {
  std::vector<double> rates{PerturbSchedule{}.rates};
  std::size_t patience = PerturbSchedule{}.patience;
  std::size_t width = PerturbSchedule{}.width;
  double budget_secs = PerturbSchedule{}.budget_secs;
  std::uint64_t max_rounds = 0;

  void add(CLI::App* app) {
    app->add_option("--rates", rates, "Perturbation rates, strictly decreasing")->delimiter(',');
    app->add_option("--patience", patience, "Non-improving rounds before the rate steps down");
    app->add_option("--width", width, "Candidates per round");
    app->add_option("--budget-secs", budget_secs, "Wall-clock budget for the search");
    app->add_option("--max-rounds", max_rounds, "Round cap, 0 for none");
  }
  PerturbSchedule get() const {
    PerturbSchedule s;
    s.rates = rates;
    s.patience = patience;
    s.width = width;
    s.budget_secs = budget_secs;
    if (max_rounds > 0) s.max_rounds = max_rounds;
    s.validate();
    return s;
  }
};

// ---- fit --------------------------------------------------------------------

struct FitArgs {
  std::string data;
  bool label_column = false;
  std::size_t k = 2;
  LossKind loss = LossKind::kl;
  EstimatorKind estimator = EstimatorKind::gaussian;
  OptimizerKind optimizer = OptimizerKind::greedy;
  double split = 0.5;
  std::uint64_t seed = 0;
  ScheduleFlags schedule;
  std::string out;
};

std::string name_of(LossKind k) { return k == LossKind::kl ? "kl" : "l2"; }
std::string name_of(EstimatorKind e) { return e == EstimatorKind::gaussian ? "gaussian" : "kde"; }
std::string name_of(OptimizerKind o) {
  for (const auto& [n, v] : kOptimizerNames)
    if (v == o) return n;
  return "?";
}

int run_fit(const FitArgs& a) {
  const PerturbSchedule schedule = a.schedule.get();
  if (a.k == 0) throw InvalidConfig("k must be at least 1");
  const Dataset data = load_csv(a.data, {a.label_column});
  const SplitPair split = split_dataset(data, a.split, a.seed);
  const PartitionObjective objective(split, a.k, a.estimator, a.loss);

  SearchState best = [&] {
    if (a.optimizer == OptimizerKind::exhaustive) return exhaustive_pmode(objective);
    const SearchState start = objective.evaluate(kmeans_init(split.estimation, a.k, derive_seed(a.seed, 1, 0)));
    if (a.optimizer == OptimizerKind::greedy) return greedy_hill_climb(objective, start);
    return perturbation_climb(objective, start, schedule, derive_seed(a.seed, 2, 0));
  }();

  json config{{"data", a.data},       {"label_column", a.label_column},
              {"k", a.k},             {"loss", name_of(a.loss)},
              {"estimator", name_of(a.estimator)}, {"optimizer", name_of(a.optimizer)},
              {"split", a.split},     {"seed", a.seed},
              {"schedule", to_json(schedule)}};
  Output out(a.out);
  emit(out, {{"command", "fit"},
             {"version", version()},
             {"config", config},
             {"seed", a.seed},
             {"validation_loss", best.loss},
             {"evaluations", best.evaluations},
             {"assignment", best.assignment.labels()},
             {"model", mixture_to_json(best.mixture)}});
  return 0;
}

// ---- score ----------------------------------------------------------------------

struct ScoreArgs {
  std::string model;
  std::string data;
  bool label_column = false;
  std::string out;
};

int run_score(const ScoreArgs& a) {
  std::ifstream in(a.model);
  if (!in) throw InvalidConfig("cannot open " + a.model);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(a.model + ": " + e.what());
  }
  const MixtureDensity model = mixture_from_json(j.contains("model") ? j.at("model") : j);
  const Dataset data = load_csv(a.data, {a.label_column});
  if (data.dim() != model.dim()) throw ShapeError("data dimension differs from the model");
  const auto scores = anomaly_scores(model, data);
  Output out(a.out);
  emit(out, {{"command", "score"},
             {"version", version()},
             {"config", {{"model", a.model}, {"data", a.data}, {"label_column", a.label_column}}},
             {"mean_log_likelihood", mean_test_log_likelihood(model, data)},
             {"scores", scores}});
  return 0;
}

// ---- anomaly ----------------------------------------------------------------------

struct AnomalyArgs {
  std::string cifar_dir;
  std::string class_name = "airplane";
  std::size_t k = 20;
  std::size_t estimation = 1200;
  std::size_t validation = 3800;
  std::size_t seeds = 5;
  std::uint64_t seed = 0;
  bool no_naive_bayes = false;
  bool scores = false;
  ScheduleFlags schedule;
  std::string out;
};

int parse_class(const std::string& s) {
  for (std::size_t i = 0; i < kCifarNames.size(); ++i)
    if (kCifarNames[i] == s) return static_cast<int>(i);
  if (s.size() == 1 && s[0] >= '0' && s[0] <= '9') return s[0] - '0';
  throw InvalidConfig("unknown CIFAR-10 class '" + s + "'");
}

int run_anomaly(const AnomalyArgs& a) {
  AnomalyConfig base;
  base.class_label = parse_class(a.class_name);
  base.k = a.k;
  base.estimation = a.estimation;
  base.validation = a.validation;
  base.schedule = a.schedule.get();
  base.naive_bayes = !a.no_naive_bayes;
  if (a.seeds == 0) throw InvalidConfig("seeds must be positive");
  const CifarSplit data = load_cifar10(a.cifar_dir, base.class_label);

  Output out(a.out);
  std::vector<AnomalyResult> results(a.seeds);
  for (std::size_t r = 0; r < a.seeds; ++r) {
    AnomalyConfig cfg = base;
    cfg.seed = derive_seed(a.seed, r, 0);
    // Only the first run recomputes the deterministic naive Bayes baseline.
    cfg.naive_bayes = base.naive_bayes && r == 0;
    results[r] = run_anomaly_experiment(data, cfg);
    json config = to_json(cfg);
    config["cifar_dir"] = a.cifar_dir;
    config["master_seed"] = a.seed;
    emit(out, {{"command", "anomaly"},
               {"version", version()},
               {"config", config},
               {"seed", cfg.seed},
               {"result", to_json(results[r], a.scores)}});
    out.stream().flush();
  }
  return 0;
}

// ---- gmm-bench --------------------------------------------------------------------

struct GmmArgs {
  std::string data;
  bool label_column = false;
  std::vector<std::size_t> k{2};
  std::size_t train = 120;
  std::size_t runs = 30;
  bool no_l2 = false;
  double em_tolerance = GmmConfig{}.em_tolerance;
  std::size_t em_max_iterations = GmmConfig{}.em_max_iterations;
  std::uint64_t seed = 0;
  std::string out;
  std::string summary;
};

int run_gmm(const GmmArgs& a) {
  Dataset data = load_csv(a.data, {a.label_column});
  Output out(a.out);
  Output summary(a.summary);
  bool header = true;
  for (std::size_t k : a.k) {
    GmmConfig cfg;
    cfg.k = k;
    cfg.train = a.train;
    cfg.runs = a.runs;
    cfg.with_l2 = !a.no_l2;
    cfg.em_tolerance = a.em_tolerance;
    cfg.em_max_iterations = a.em_max_iterations;
    cfg.seed = a.seed;
    const GmmReport report = run_gmm_experiment(data, cfg);
    json config = to_json(cfg);
    config["data"] = a.data;
    config["label_column"] = a.label_column;
    for (const auto& run : report.runs)
      emit(out, {{"command", "gmm-bench"}, {"version", version()}, {"config", config},
                 {"seed", run.seed}, {"result", to_json(run)}});
    json agg{{"command", "gmm-bench"}, {"version", version()}, {"config", config},
             {"seed", a.seed}, {"kl_vs_em", to_json(report.kl_vs_em)}};
    if (report.l2_vs_em) agg["l2_vs_em"] = to_json(*report.l2_vs_em);
    emit(out, agg);
    std::string csv = gmm_summary_csv(cfg, report);
    if (!header) csv.erase(0, csv.find('\n') + 1);
    header = false;
    summary.stream() << csv;
  }
  return 0;
}

// ---- oracle-check / scheffe-demo -------------------------------------------------------

int run_oracle(const OracleConfig& cfg, const std::string& path) {
  const OracleReport report = run_oracle_check(cfg);
  Output out(path);
  emit(out, {{"command", "oracle-check"}, {"version", version()}, {"config", to_json(cfg)},
             {"seed", cfg.seed}, {"result", to_json(report)}});
  const bool ok = report.dominance_failures == 0 && report.local_min_failures == 0 &&
                  report.ordering_failures == 0;
  std::cerr << "oracle-check: " << report.instances.size() << " instances, "
            << report.dominance_failures << " dominance failures, " << report.local_min_failures
            << " non-local-minima; four-point optimum reached in " << report.four_point_perturb_hits
            << '/' << report.four_point_trials << " perturbation runs\n";
  return ok ? 0 : 1;
}

int run_scheffe(const ScheffeDemoConfig& cfg, const std::string& path) {
  const ScheffeDemoReport report = run_scheffe_demo(cfg);
  Output out(path);
  emit(out, {{"command", "scheffe-demo"}, {"version", version()}, {"config", to_json(cfg)},
             {"seed", cfg.seed}, {"result", to_json(report)}});
  return 0;
}

// Expands `--config FILE` into flags taken from the subcommand's INI section.
std::vector<std::string> expand_config(CLI::App& app, std::vector<std::string> args) {
  std::optional<std::string> path;
  std::size_t at = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!path) return args;
  CLI::App* sub = nullptr;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i].empty() || args[i][0] == '-') continue;
    sub = app.get_subcommand_no_throw(args[i]);
    if (sub) {
      at = i + 1;
      break;
    }
  }
  if (!sub) throw InvalidConfig("--config needs a subcommand");
  if (!std::ifstream(*path)) throw InvalidConfig("cannot open config " + *path);

  std::vector<std::string> injected;
  for (const auto& item : CLI::ConfigINI().from_file(*path)) {
    if (item.name == "++" || item.name == "--") continue;
    const bool global = item.parents.empty();
    if (!global && !(item.parents.size() == 1 && item.parents[0] == sub->get_name())) continue;
    if (!sub->get_option_no_throw("--" + item.name)) {
      if (global) continue;
      throw InvalidConfig("unknown key '" + item.name + "' in section [" + sub->get_name() + "]");
    }
    std::string value;
    for (std::size_t v = 0; v < item.inputs.size(); ++v) value += (v ? "," : "") + item.inputs[v];
    injected.push_back("--" + item.name + "=" + value);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
  return args;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partitioned mixtures of density estimators"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_flag_callback("--version", [] {
    std::cout << "pmode " << version() << '\n';
    std::exit(0);
  }, "Print the version");
  app.footer("Each subcommand accepts --config FILE: an INI file whose [subcommand] section "
             "supplies defaults for that subcommand's flags.");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a partitioned mixture to a CSV file");
  fit_cmd->add_option("--data", fit.data, "CSV input")->required()->check(CLI::ExistingFile);
  fit_cmd->add_flag("--label-column", fit.label_column, "Last column is a class label; ignore it");
  fit_cmd->add_option("--k", fit.k, "Mixture components");
  fit_cmd->add_option("--loss", fit.loss, "Validation loss")
      ->transform(CLI::CheckedTransformer(kLossNames))
      ->option_text("{kl,l2}");
  fit_cmd->add_option("--estimator", fit.estimator, "Component estimator")
      ->transform(CLI::CheckedTransformer(kEstimatorNames))
      ->option_text("{gaussian,kde}");
  fit_cmd->add_option("--optimizer", fit.optimizer, "Partition search")
      ->transform(CLI::CheckedTransformer(kOptimizerNames))
      ->option_text("{exhaustive,greedy,perturb}");
  fit_cmd->add_option("--split", fit.split, "Fraction of rows in the estimation set");
  fit_cmd->add_option("--seed", fit.seed, "Master seed")->required();
  fit_cmd->add_option("--out", fit.out, "Output file (default stdout)");
  fit.schedule.add(fit_cmd);

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score rows of a CSV file under a fitted model");
  score_cmd->add_option("--model", score.model, "JSON written by fit")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--data", score.data, "CSV input")->required()->check(CLI::ExistingFile);
  score_cmd->add_flag("--label-column", score.label_column, "Last column is a class label; ignore it");
  score_cmd->add_option("--out", score.out, "Output file (default stdout)");

  AnomalyArgs anomaly;
  auto* anomaly_cmd = app.add_subcommand("anomaly", "One-vs-rest CIFAR-10 anomaly detection");
  anomaly_cmd->add_option("--cifar-dir", anomaly.cifar_dir, "Directory of CIFAR-10 binary batches")
      ->required()->check(CLI::ExistingDirectory);
  anomaly_cmd->add_option("--class", anomaly.class_name, "Nominal class (name or 0-9)");
  anomaly_cmd->add_option("--k", anomaly.k, "Mixture components");
  anomaly_cmd->add_option("--estimation", anomaly.estimation, "Estimation set size");
  anomaly_cmd->add_option("--validation", anomaly.validation, "Validation set size");
  anomaly_cmd->add_option("--seeds", anomaly.seeds, "Number of seeded runs");
  anomaly_cmd->add_option("--seed", anomaly.seed, "Master seed")->required();
  anomaly_cmd->add_flag("--no-naive-bayes", anomaly.no_naive_bayes, "Skip the naive Bayes baseline");
  anomaly_cmd->add_flag("--scores", anomaly.scores, "Include per-image scores in the records");
  anomaly_cmd->add_option("--out", anomaly.out, "JSONL output (default stdout)");
  anomaly.schedule.add(anomaly_cmd);

  GmmArgs gmm;
  auto* gmm_cmd = app.add_subcommand("gmm-bench", "Paired EM versus PMODE Gaussian mixture runs");
  gmm_cmd->add_option("--data", gmm.data, "CSV input")->required()->check(CLI::ExistingFile);
  gmm_cmd->add_flag("--label-column", gmm.label_column, "Last column is a class label; ignore it");
  gmm_cmd->add_option("--k", gmm.k, "Component counts, comma separated")->delimiter(',');
  gmm_cmd->add_option("--train", gmm.train, "Training rows per run; the rest are test rows");
  gmm_cmd->add_option("--runs", gmm.runs, "Paired runs per k");
  gmm_cmd->add_flag("--no-l2", gmm.no_l2, "Skip the L2-loss variant");
  gmm_cmd->add_option("--em-tolerance", gmm.em_tolerance, "EM stopping tolerance on mean log-likelihood");
  gmm_cmd->add_option("--em-max-iterations", gmm.em_max_iterations, "EM iteration cap");
  gmm_cmd->add_option("--seed", gmm.seed, "Master seed")->required();
  gmm_cmd->add_option("--out", gmm.out, "JSONL per-run records (default stdout)");
  gmm_cmd->add_option("--summary", gmm.summary, "Aggregate CSV (default stdout)");

  OracleConfig oracle;
  std::string oracle_out;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare climbers with exhaustive search");
  oracle_cmd->add_option("--instances", oracle.instances, "Synthetic instances");
  oracle_cmd->add_option("--max-m", oracle.max_m, "Largest estimation set");
  oracle_cmd->add_option("--max-k", oracle.max_k, "Largest component count");
  oracle_cmd->add_option("--trials", oracle.four_point_trials, "Climber runs on the four-point instance");
  oracle_cmd->add_option("--seed", oracle.seed, "Master seed")->required();
  oracle_cmd->add_option("--out", oracle_out, "Output file (default stdout)");

  ScheffeDemoConfig scheffe;
  std::string scheffe_out;
  auto* scheffe_cmd = app.add_subcommand("scheffe-demo", "Pairwise Scheffe selection on Gaussians");
  scheffe_cmd->add_option("--true-mean", scheffe.true_mean, "Mean of the sampling density");
  scheffe_cmd->add_option("--first-mean", scheffe.first_mean, "Mean of the first candidate");
  scheffe_cmd->add_option("--second-mean", scheffe.second_mean, "Mean of the second candidate");
  scheffe_cmd->add_option("--samples", scheffe.samples, "Samples per trial");
  scheffe_cmd->add_option("--mc-samples", scheffe.mc_samples, "Monte Carlo draws per trial");
  scheffe_cmd->add_option("--trials", scheffe.trials, "Trials");
  scheffe_cmd->add_option("--lower", scheffe.lower, "Integration box lower edge");
  scheffe_cmd->add_option("--upper", scheffe.upper, "Integration box upper edge");
  scheffe_cmd->add_option("--seed", scheffe.seed, "Master seed")->required();
  scheffe_cmd->add_option("--out", scheffe_out, "Output file (default stdout)");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(app, std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; usage errors share the error status.
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*fit_cmd) return run_fit(fit);
    if (*score_cmd) return run_score(score);
    if (*anomaly_cmd) return run_anomaly(anomaly);
    if (*gmm_cmd) return run_gmm(gmm);
    if (*oracle_cmd) return run_oracle(oracle, oracle_out);
    if (*scheffe_cmd) return run_scheffe(scheffe, scheffe_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
