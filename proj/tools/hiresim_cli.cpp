// hiresim command-line front end.
//
// Exit codes: 0 success, 1 configuration/validation error, 2 runtime error,
// 3 a property asserted from the theory failed empirically.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hiresim/config.hpp"
#include "hiresim/harness.hpp"
#include "hiresim/manipulation.hpp"
#include "hiresim/metrics.hpp"
#include "hiresim/threshold.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitLemmaViolation = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw hiresim::ConfigError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string default_output_dir() {
  if (const char* env = std::getenv("HIRESIM_OUTPUT_DIR")) return env;
  return "";
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  std::string format;
  std::optional<std::size_t> replications;
  std::size_t jobs = 1;
};

void apply_overrides(hiresim::ExperimentConfig& config, const CommonFlags& flags) {
  if (flags.seed) config.seed = *flags.seed;
  if (flags.replications) config.replications = *flags.replications;
  if (!flags.output_dir.empty()) config.output_directory = flags.output_dir;
  if (!flags.format.empty()) {
    if (flags.format == "json") config.output_format = hiresim::OutputFormat::Json;
    else if (flags.format == "csv") config.output_format = hiresim::OutputFormat::Csv;
    else if (flags.format == "both") config.output_format = hiresim::OutputFormat::Both;
    else throw hiresim::ConfigError("--format must be json, csv or both");
  }
}

void print_scheme_summary(const hiresim::ExperimentReport& report) {
  std::printf("%-16s %10s %10s %10s %10s %10s\n", "scheme", "tpr", "d_tpr", "accuracy", "tau*", "ci(tpr)");
  for (const auto& outcome : report.schemes) {
    auto metric = [&](const char* name) {
      auto it = outcome.summary.metrics.find(name);
      return it == outcome.summary.metrics.end() ? hiresim::MetricSummary{} : it->second;
    };
    std::printf("%-16s %10.4f %10.4f %10.4f %10.4f %10.4f\n", outcome.name.c_str(),
                metric("tpr").mean, metric("tpr_disparity").mean, metric("accuracy").mean,
                metric("tau_star").mean, metric("tpr").half_width);
  }
}

// Compact model spec: "null", or semicolon-separated per-dimension
// distributions, e.g. "uniform(1,3);gaussian(0,1)".
hiresim::ManipulationModel parse_model_spec(const std::string& text) {
  if (text == "null") return hiresim::ManipulationModel::null_model();
  std::vector<hiresim::ScalarDistribution> marginals;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    auto open = part.find('(');
    auto close = part.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
      throw hiresim::ConfigError("cannot parse distribution '" + part + "'");
    std::string name = part.substr(0, open);
    std::string args = part.substr(open + 1, close - open - 1);
    std::vector<double> values;
    std::stringstream as(args);
    std::string cell;
    while (std::getline(as, cell, ',')) values.push_back(std::stod(cell));
    if (name == "pointmass" && values.size() == 1)
      marginals.push_back(hiresim::ScalarDistribution::point_mass(values[0]));
    else if (name == "uniform" && values.size() == 2)
      marginals.push_back(hiresim::ScalarDistribution::uniform(values[0], values[1]));
    else if (name == "gaussian" && values.size() == 2)
      marginals.push_back(hiresim::ScalarDistribution::gaussian(values[0], values[1]));
    else
      throw hiresim::ConfigError("cannot parse distribution '" + part + "'");
  }
  if (marginals.empty()) throw hiresim::ConfigError("empty model spec");
  return hiresim::ManipulationModel::parametric(std::move(marginals));
}

int cmd_simulate(const CommonFlags& flags) {
  auto config = hiresim::load_experiment_config(read_file(flags.config_path));
  apply_overrides(config, flags);
  auto report = hiresim::run_experiment(config, flags.jobs);
  hiresim::write_report_files(report, config.output_directory, config.output_format);
  print_scheme_summary(report);
  std::printf("artifacts written to %s\n", config.output_directory.c_str());
  return kExitOk;
}

int cmd_validate(const CommonFlags& flags) {
  hiresim::load_experiment_config(read_file(flags.config_path));
  std::printf("config ok\n");
  return kExitOk;
}

int cmd_nticket(const CommonFlags& flags, int n_max) {
  if (n_max < 2) throw hiresim::ConfigError("--n-max must be >= 2");
  auto config = hiresim::load_experiment_config(read_file(flags.config_path));
  apply_overrides(config, flags);
  if (config.model_hirer.is_null())
    throw hiresim::ConfigError("nticket: the config must declare a non-null hirer model");
  config.schemes.clear();
  config.schemes.push_back({hiresim::SchemeKind::Traditional, 0});
  for (int n = 1; n <= n_max; ++n) config.schemes.push_back({hiresim::SchemeKind::NTicket, n});

  auto report = hiresim::run_experiment(config, flags.jobs);
  hiresim::write_report_files(report, config.output_directory, hiresim::OutputFormat::Both);

  std::vector<std::pair<int, double>> sequence;
  for (const auto& point : report.disparity_curve) sequence.emplace_back(point.tickets, point.delta_tpr_abs);
  auto fit = hiresim::fit_geometric_decay(sequence);
  if (fit.already_converged) {
    std::printf("disparity already converged: every |delta_tpr| is zero\n");
  } else {
    std::printf("fitted decay rate k = %.4f (r^2 = %.4f, %zu points)\n", fit.rate, fit.r_squared,
                fit.points_used);
  }
  if (report.contraction_rate)
    std::printf("analytic contraction rate k = %.4f\n", *report.contraction_rate);
  std::printf("curve written to %s/disparity_curve.csv\n", config.output_directory.c_str());
  return kExitOk;
}

int cmd_dominance(const std::string& a_spec, const std::string& b_spec) {
  auto a = parse_model_spec(a_spec);
  auto b = parse_model_spec(b_spec);
  auto verdict = hiresim::dominates_analytic(a, b);
  std::printf("%s (%s)", hiresim::to_string(verdict.relation),
              verdict.method == hiresim::DominanceMethod::Analytic ? "Analytic" : "EmpiricalCDF");
  if (verdict.witness) std::printf(", witness a=%.6g", *verdict.witness);
  std::printf("\n");
  return kExitOk;  // verdicts are data, not errors
}

int cmd_replay(const std::string& table_path, const std::string& scheme_name, double epsilon,
               double train_fraction, std::size_t splits, std::uint64_t seed, double confidence,
               double target_fpr, const std::string& output_dir, const std::string& format) {
  hiresim::SchemeKind scheme;
  if (scheme_name == "traditional") scheme = hiresim::SchemeKind::Traditional;
  else if (scheme_name == "two_ticket") scheme = hiresim::SchemeKind::TwoTicket;
  else throw hiresim::ConfigError("--scheme must be traditional or two_ticket");

  std::ifstream in(table_path, std::ios::binary);
  if (!in) throw hiresim::ConfigError("cannot open score table: " + table_path);
  auto table = hiresim::read_score_table(in);
  auto summary = hiresim::replay(table, scheme, epsilon, train_fraction, splits, seed, confidence,
                                 target_fpr);

  hiresim::ExperimentReport report;
  report.seed = seed;
  report.config_digest = "replay";
  hiresim::SchemeOutcome outcome;
  outcome.name = scheme_name;
  outcome.tickets = scheme == hiresim::SchemeKind::TwoTicket ? 1 : 0;
  outcome.summary = summary;
  report.schemes.push_back(outcome);
  if (!output_dir.empty()) {
    hiresim::OutputFormat fmt = hiresim::OutputFormat::Both;
    if (format == "json") fmt = hiresim::OutputFormat::Json;
    else if (format == "csv") fmt = hiresim::OutputFormat::Csv;
    hiresim::write_report_files(report, output_dir, fmt);
  }
  print_scheme_summary(report);
  return kExitOk;
}

int cmd_threshold(const CommonFlags& flags, std::size_t draws, double tolerance, bool assert_lemma) {
  auto config = hiresim::load_experiment_config(read_file(flags.config_path));
  apply_overrides(config, flags);
  hiresim::RngStream root(config.seed);
  auto population = hiresim::sample_population(config.population, config.population_count,
                                               root.child("population"));
  std::vector<hiresim::ManipulationModel> hirer_models;
  if (!config.model_hirer.is_null()) hirer_models.push_back(config.model_hirer);
  if (assert_lemma) {
    for (const auto& hirer : hirer_models) {
      if (!hiresim::dominates_analytic(config.model_privileged, hirer).dominates_or_equal())
        throw hiresim::LemmaViolationError(
            "the privileged model does not dominate the hirer model, so the constant-threshold "
            "condition does not apply");
    }
  }
  auto report = hiresim::check_threshold_consistency(
      config.scorer, population, config.model_privileged, config.model_unprivileged, hirer_models,
      draws, config.epsilon, root.child("threshold"), assert_lemma, tolerance);
  std::printf("channel maxima: M=%.6f M_P=%.6f M_U=%.6f", report.maxima.unmanipulated,
              report.maxima.privileged, report.maxima.unprivileged);
  for (std::size_t h = 0; h < report.maxima.hirer.size(); ++h)
    std::printf(" M_H[%zu]=%.6f", h, report.maxima.hirer[h]);
  std::printf("\n");
  for (const auto& t : report.thresholds)
    std::printf("tau*(%s) = %.6f\n", t.scheme.c_str(), t.tau_star);
  std::printf("max |tau difference| = %.6g\n", report.max_abs_difference);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hiresim: hiring-scheme simulation under stochastic resume manipulations"};
  app.require_subcommand(1);

  CommonFlags flags;
  flags.output_dir = default_output_dir();

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", flags.config_path, "experiment config (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--output", flags.output_dir, "output directory");
    cmd->add_option("--format", flags.format, "json, csv or both");
    cmd->add_option("--replications", flags.replications, "override Monte Carlo replications");
    cmd->add_option("--jobs", flags.jobs, "worker threads (never changes output bytes)");
  };

  auto* simulate = app.add_subcommand("simulate", "run the configured experiment");
  add_common(simulate, true);

  auto* validate = app.add_subcommand("validate-config", "validate a config and exit");
  validate->add_option("--config", flags.config_path, "experiment config (JSON)")->required();

  auto* nticket = app.add_subcommand("nticket", "sweep ticket counts and fit the disparity decay");
  add_common(nticket, true);
  int n_max = 0;
  nticket->add_option("--n-max", n_max, "largest ticket count")->required();

  auto* dominance = app.add_subcommand("dominance", "compare two manipulation models");
  std::string spec_a, spec_b;
  dominance->add_option("--a", spec_a, "first model spec, e.g. uniform(1,3) or null")->required();
  dominance->add_option("--b", spec_b, "second model spec")->required();

  auto* replay = app.add_subcommand("replay", "re-analyze an externally produced score table");
  std::string table_path, scheme_name = "traditional", replay_format = "both", replay_output;
  double replay_epsilon = 1e-9, replay_train = 0.7, replay_confidence = 0.95, replay_target_fpr = 0.0;
  std::size_t replay_splits = 100;
  std::uint64_t replay_seed = 0;
  replay->add_option("--table", table_path, "score table CSV")->required();
  replay->add_option("--scheme", scheme_name, "traditional or two_ticket");
  replay->add_option("--epsilon", replay_epsilon, "threshold exceedance margin");
  replay->add_option("--train-fraction", replay_train, "train split fraction");
  replay->add_option("--splits", replay_splits, "train/test splits");
  replay->add_option("--confidence", replay_confidence, "CI confidence level");
  replay->add_option("--target-fpr", replay_target_fpr, "relaxed training FPR target");
  replay->add_option("--seed", replay_seed, "split stream seed")->required();
  replay->add_option("--output", replay_output, "output directory");
  replay->add_option("--format", replay_format, "json, csv or both");

  auto* threshold = app.add_subcommand("threshold", "estimate per-scheme thresholds and their spread");
  add_common(threshold, true);
  std::size_t threshold_draws = 32;
  double threshold_tolerance = 0.0;
  bool assert_lemma = false;
  threshold->add_option("--draws", threshold_draws, "manipulation draws per channel");
  threshold->add_option("--tolerance", threshold_tolerance, "allowed threshold spread");
  threshold->add_flag("--assert-lemma", assert_lemma,
                      "fail (exit 3) when the dominance condition or the threshold spread is violated");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints help or the usage error
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(flags);
    if (validate->parsed()) return cmd_validate(flags);
    if (nticket->parsed()) return cmd_nticket(flags, n_max);
    if (dominance->parsed()) return cmd_dominance(spec_a, spec_b);
    if (replay->parsed())
      return cmd_replay(table_path, scheme_name, replay_epsilon, replay_train, replay_splits,
                        replay_seed, replay_confidence, replay_target_fpr, replay_output,
                        replay_format);
    if (threshold->parsed())
      return cmd_threshold(flags, threshold_draws, threshold_tolerance, assert_lemma);
  } catch (const hiresim::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const hiresim::LemmaViolationError& e) {
    std::fprintf(stderr, "lemma violation: %s\n", e.what());
    return kExitLemmaViolation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
