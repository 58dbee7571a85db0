// SPDX-License-Identifier: Apache-2.0
//
// surveykit - detect potentially misrepresented subgroups in weighted
// categorical survey microdata and evaluate integrative sampling strategies.
//
//   surveykit detect     score rows/variables and split typical vs atypical
//   surveykit validate   leave-one-out / k-fold MCC validation of a detector
//   surveykit importance permutation feature importance with jackknife CIs
//   surveykit profile    spectral subgroups + medoids inside the outlier set
//   surveykit simulate   Monte Carlo comparison of sampling strategies
//   surveykit fixture    synthetic microdata from a marginals file
//
// Every command is a pure function of (inputs, seed): reruns are
// byte-identical. All randomness funnels through the --seed flag.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "surveykit/surveykit.hpp"

namespace {

using namespace surveykit;

struct CommonOptions {
  std::string input;
  std::string spec;
  std::string weights_col = "WEIGHT";
  std::string detector = "entropy";
  std::string out = ".";
  double gamma = 1.0;
  double variance_fraction = 0.95;
  int epochs = 500;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_dataset_flags(CLI::App* cmd, CommonOptions& options) {
  cmd->add_option("--input", options.input, "input CSV")->required();
  cmd->add_option("--spec", options.spec, "variable schema (.vars)")->required();
  cmd->add_option("--weights-col", options.weights_col, "weight column name");
}

void add_detector_flags(CLI::App* cmd, CommonOptions& options, bool allow_entropy) {
  auto* opt = cmd->add_option("--detector", options.detector,
                              allow_entropy ? "entropy|kpca|ae" : "kpca|ae");
  if (allow_entropy) {
    opt->check(CLI::IsMember({"entropy", "kpca", "ae"}));
  } else {
    opt->check(CLI::IsMember({"kpca", "ae"}))->required();
  }
  cmd->add_option("--gamma", options.gamma, "kernel decay rate");
  cmd->add_option("--variance-fraction", options.variance_fraction, "retained spectrum mass");
  cmd->add_option("--epochs", options.epochs, "autoencoder training epochs");
  cmd->add_option("--lr", options.learning_rate, "autoencoder learning rate");
}

void add_seed_flag(CLI::App* cmd, CommonOptions& options) {
  cmd->add_option("--seed", options.seed, "master seed")
      ->each([&options](const std::string&) { options.seed_given = true; });
}

void require_seed(const CommonOptions& options, const std::string& command) {
  require(options.seed_given, ErrorCode::invalid_argument,
          "--seed is required for '" + command + "'");
}

CategoricalDataset load_input(const CommonOptions& options) {
  return load_csv(options.input, std::filesystem::path(options.spec), options.weights_col);
}

KpcaDetector make_kpca(const CommonOptions& options) {
  KpcaDetector detector;
  detector.config.gamma = options.gamma;
  detector.config.variance_fraction = options.variance_fraction;
  return detector;
}

AeDetector make_ae(const CommonOptions& options) {
  AeDetector detector;
  detector.config.epochs = options.epochs;
  detector.config.learning_rate = options.learning_rate;
  detector.config.seed = derive_seed(options.seed, 0xae);
  return detector;
}

std::filesystem::path out_dir(const CommonOptions& options) {
  std::filesystem::path dir(options.out);
  std::filesystem::create_directories(dir);
  return dir;
}

int cmd_detect(const CommonOptions& options) {
  const auto data = load_input(options);
  require(data.n_rows() >= 2, ErrorCode::invalid_argument, "detection needs at least 2 rows");
  const auto weights = normalize_weights(data);
  const auto dir = out_dir(options);

  if (options.detector == "entropy") {
    const auto report = entropy_report(data, weights);
    const auto labeling = two_means_1d(report.scores());
    write_json(dir / "scores.json", variable_scores_json(report));
    write_json(dir / "labeling.json", labeling_json(labeling, "variable_id"));
    write_json(dir / "entropy_report.json", entropy_report_json(report, labeling));
    std::size_t atypical = labeling.atypical_ids().size();
    std::printf("entropy: %zu of %zu variables atypical (boundary %.6g)\n", atypical,
                data.n_vars(), labeling.boundary);
    return 0;
  }

  std::vector<double> scores;
  if (options.detector == "kpca") {
    const auto model = make_kpca(options).fit(data, weights);
    scores = model.scores;
    write_json(dir / "model.json", kpca_spectrum_json(model.model));
  } else {
    require_seed(options, "detect --detector ae");
    const auto model = make_ae(options).fit(data, weights);
    scores = model.scores;
    write_json(dir / "model.json", ae_model_json(model.model));
  }
  const auto labeling = two_means_1d(scores);
  write_json(dir / "scores.json", row_scores_json(options.detector, scores));
  write_json(dir / "labeling.json", labeling_json(labeling, "row_id"));
  std::printf("%s: %zu of %zu rows atypical (boundary %.6g)\n", options.detector.c_str(),
              labeling.atypical_ids().size(), data.n_rows(), labeling.boundary);
  return 0;
}

int cmd_validate(const CommonOptions& options, const std::string& scheme,
                 const std::string& refit, std::size_t folds) {
  require_seed(options, "validate");
  const auto data = load_input(options);
  const auto weights = normalize_weights(data);
  const auto dir = out_dir(options);

  ValidationReport report;
  if (options.detector == "entropy") {
    report = scheme == "loo"
                 ? entropy_stability_validation(data, weights)
                 : entropy_internal_validation(data, weights, folds, derive_seed(options.seed, 0xf0));
  } else {
    // KPCA defaults to refitting the detector per left-out item; the AE
    // defaults to refitting only the threshold (one fit is costly).
    RefitMode mode = options.detector == "kpca" ? RefitMode::full : RefitMode::threshold_only;
    if (refit == "full") mode = RefitMode::full;
    if (refit == "threshold") mode = RefitMode::threshold_only;
    if (options.detector == "kpca") {
      const auto detector = make_kpca(options);
      report = scheme == "loo"
                   ? stability_validation(detector, data, weights, mode)
                   : internal_validation(detector, data, weights, folds,
                                         derive_seed(options.seed, 0xf0));
    } else {
      const auto detector = make_ae(options);
      report = scheme == "loo"
                   ? stability_validation(detector, data, weights, mode)
                   : internal_validation(detector, data, weights, folds,
                                         derive_seed(options.seed, 0xf0));
    }
  }
  write_json(dir / "validation.json", validation_json(report, options.detector));
  std::printf("%s %s: MCC %.4f [%.4f, %.4f] over %zu iterations (%zu degenerate)\n",
              options.detector.c_str(), to_string(report.scheme), report.mcc_mean, report.ci_low,
              report.ci_high, report.iterations, report.degenerate_count);
  return 0;
}

int cmd_importance(const CommonOptions& options, std::size_t reps) {
  require_seed(options, "importance");
  const auto data = load_input(options);
  const auto weights = normalize_weights(data);
  const auto dir = out_dir(options);
  if (reps < 5) std::fprintf(stderr, "warning: jackknife CI over only %zu permutations\n", reps);

  ImportanceReport report;
  if (options.detector == "kpca") {
    const auto model = make_kpca(options).fit(data, weights);
    const auto reference = two_means_1d(model.train_scores());
    report = permutation_importance(model, reference, data, reps, derive_seed(options.seed, 0x1f));
  } else {
    const auto model = make_ae(options).fit(data, weights);
    const auto reference = two_means_1d(model.train_scores());
    report = permutation_importance(model, reference, data, reps, derive_seed(options.seed, 0x1f));
  }
  write_json(dir / "importance.json", importance_json(report, options.detector));
  detail::write_text(dir / "importance.csv", importance_csv(report));
  std::printf("%s importance over %zu permutations written\n", options.detector.c_str(), reps);
  return 0;
}

int cmd_profile(const CommonOptions& options, int k_max) {
  require_seed(options, "profile");
  const auto data = load_input(options);
  const auto weights = normalize_weights(data);
  const auto dir = out_dir(options);

  std::vector<double> scores;
  if (options.detector == "kpca") {
    scores = make_kpca(options).fit(data, weights).scores;
  } else {
    scores = make_ae(options).fit(data, weights).scores;
  }
  const auto labeling = two_means_1d(scores);
  const auto outliers = labeling.atypical_ids();
  require(outliers.size() >= 3, ErrorCode::too_few_items,
          "profiling needs at least 3 detected outliers, got " + std::to_string(outliers.size()));
  const int effective_k_max =
      std::min(k_max, static_cast<int>(outliers.size()) - 1);

  KernelConfig kernel{options.gamma, options.variance_fraction};
  const auto partition =
      select_k(data, outliers, effective_k_max, kernel, derive_seed(options.seed, 0x5c));
  const auto profile = medoids(data, outliers, partition.assignment);

  write_json(dir / "subgroups.json", subgroups_json(partition));
  write_json(dir / "medoids.json", medoids_json(profile, data.specs));
  detail::write_text(dir / "medoids.csv", medoids_csv(profile, data.specs));
  std::printf("%s: %zu outliers in %d subgroups (silhouette %.4f)\n", options.detector.c_str(),
              outliers.size(), partition.chosen_k,
              partition.silhouette_by_k[static_cast<std::size_t>(partition.chosen_k - 2)].second);
  return 0;
}

int cmd_simulate(const CommonOptions& options, const std::string& scenario_path,
                 std::size_t replications_override) {
  require_seed(options, "simulate");
  ScenarioConfig config = parse_scenario(scenario_path);
  if (replications_override > 0) config.replications = replications_override;
  const auto dir = out_dir(options);

  const auto result = run_monte_carlo(config, options.seed);
  write_json(dir / "summary.json", simulation_summary_json(result));
  detail::write_text(dir / "estimates.csv", estimates_csv(result));
  detail::write_text(dir / "convergence_trace.csv", convergence_trace_csv(result));
  detail::write_text(dir / "rb_distribution.csv", rb_distribution_csv(result));

  std::printf("true mean %.6f, M = %zu\n", result.true_mean, result.replications);
  std::printf("%-14s %-10s %-12s %-12s %-12s\n", "allocation", "estimator", "mse", "p5", "p95");
  for (const auto& r : result.results) {
    std::printf("%-14s %-10s %-12.4g %-12.6g %-12.6g%s\n", r.allocation.c_str(),
                r.estimator.c_str(), r.mse, r.p5, r.p95, r.unreliable ? "  (unreliable)" : "");
  }
  return 0;
}

int cmd_fixture(const CommonOptions& options, const std::string& marginals_path, std::size_t n,
                const std::string& name) {
  require_seed(options, "fixture");
  const auto marginals = load_marginals(marginals_path);
  const auto data = generate_fixture(marginals, n, options.seed);
  const auto dir = out_dir(options);
  save_csv(dir / (name + ".csv"), data, options.weights_col);
  save_varspec(dir / (name + ".vars"), marginals.specs);
  std::printf("wrote %s.csv and %s.vars (%zu rows, %zu variables)\n", name.c_str(), name.c_str(),
              data.n_rows(), data.n_vars());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surveykit - misrepresented-subgroup detection and sampling-strategy simulation"};
  app.require_subcommand(1);

  CommonOptions options;

  auto* detect = app.add_subcommand("detect", "score rows/variables and label outliers");
  add_dataset_flags(detect, options);
  add_detector_flags(detect, options, true);
  add_seed_flag(detect, options);
  detect->add_option("--out", options.out, "output directory");

  std::string scheme = "loo";
  std::string refit = "default";
  std::size_t folds = 10;
  auto* validate = app.add_subcommand("validate", "stability / internal validation (MCC)");
  add_dataset_flags(validate, options);
  add_detector_flags(validate, options, true);
  add_seed_flag(validate, options);
  validate->add_option("--out", options.out, "output directory");
  validate->add_option("--scheme", scheme, "loo|10fold")->check(CLI::IsMember({"loo", "10fold"}));
  validate->add_option("--refit", refit, "full|threshold (leave-one-out detector handling)")
      ->check(CLI::IsMember({"default", "full", "threshold"}));
  validate->add_option("--folds", folds, "fold count for --scheme 10fold");

  std::size_t reps = 30;
  auto* importance = app.add_subcommand("importance", "permutation feature importance");
  add_dataset_flags(importance, options);
  add_detector_flags(importance, options, false);
  add_seed_flag(importance, options);
  importance->add_option("--out", options.out, "output directory");
  importance->add_option("--reps", reps, "permutations per variable");

  int k_max = 10;
  auto* profile = app.add_subcommand("profile", "subgroup discovery inside the outlier set");
  add_dataset_flags(profile, options);
  add_detector_flags(profile, options, false);
  add_seed_flag(profile, options);
  profile->add_option("--out", options.out, "output directory");
  profile->add_option("--k-max", k_max, "largest candidate subgroup count");

  std::string scenario_path;
  std::size_t replications_override = 0;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo sampling-strategy comparison");
  simulate->add_option("--scenario", scenario_path, "scenario config file")->required();
  simulate->add_option("--replications", replications_override, "override replication count");
  add_seed_flag(simulate, options);
  simulate->add_option("--out", options.out, "output directory");

  std::string marginals_path, fixture_name = "fixture";
  std::size_t fixture_n = 1925;
  auto* fixture = app.add_subcommand("fixture", "generate synthetic microdata from marginals");
  fixture->add_option("--marginals", marginals_path, "marginals file")->required();
  fixture->add_option("--n", fixture_n, "row count");
  fixture->add_option("--name", fixture_name, "output file stem");
  add_seed_flag(fixture, options);
  fixture->add_option("--out", options.out, "output directory");
  fixture->add_option("--weights-col", options.weights_col, "weight column name");

  CLI11_PARSE(app, argc, argv);

  try {
    if (detect->parsed()) return cmd_detect(options);
    if (validate->parsed()) return cmd_validate(options, scheme, refit, folds);
    if (importance->parsed()) return cmd_importance(options, reps);
    if (profile->parsed()) return cmd_profile(options, k_max);
    if (simulate->parsed()) return cmd_simulate(options, scenario_path, replications_override);
    if (fixture->parsed()) return cmd_fixture(options, marginals_path, fixture_n, fixture_name);
  } catch (const surveykit::Error& error) {
    std::cerr << surveykit::error_json(error).dump() << "\n";
    return 1;
  } catch (const std::exception& error) {
    std::cerr << surveykit::json{{"schema_version", surveykit::kSchemaVersion},
                                 {"error", "Internal"},
                                 {"message", error.what()}}
                     .dump()
              << "\n";
    return 1;
  }
  return 0;
}
