#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hiresim/config.hpp"
#include "hiresim/core_model.hpp"
#include "hiresim/errors.hpp"
#include "hiresim/metrics.hpp"
#include "hiresim/rng.hpp"
#include "hiresim/schemes.hpp"
#include "hiresim/score_table.hpp"
#include "hiresim/scoring.hpp"
#include "hiresim/threshold.hpp"

namespace hiresim {

/// Index-sliced parallel loop. Work item i writes only to slot i, so the
/// result is identical for any worker count.
inline void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::size_t used = std::min(jobs, count);
  for (std::size_t w = 0; w < used; ++w) {
    workers.emplace_back([&, w]() {
      for (std::size_t i = w; i < count; i += used) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

struct PipelineOptions {
  std::size_t splits = 2;
  double train_fraction = 0.7;
  double confidence = 0.95;
  double epsilon = 1e-9;
  double target_fpr = 0.0;
  bool classic_bootstrap = false;
  bool use_hirer_draws = true;            // false drops the hirer columns (traditional replay)
  std::optional<double> fixed_threshold;  // bypasses threshold learning
};

namespace detail {

inline double considered_score(const ScoreTableRow& row, bool use_hirer_draws) {
  return use_hirer_draws ? row.play.considered_score() : row.play.submitted_score();
}

/// Train/test split of row indices. Partition mode shuffles and cuts;
/// classic bootstrap resamples both halves with replacement.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t count, double train_fraction, bool classic_bootstrap, RngStream rng) {
  std::size_t train_count = static_cast<std::size_t>(train_fraction * static_cast<double>(count));
  train_count = std::min(std::max<std::size_t>(train_count, 1), count - 1);
  std::vector<std::size_t> train, test;
  if (classic_bootstrap) {
    train.reserve(train_count);
    test.reserve(count - train_count);
    for (std::size_t i = 0; i < train_count; ++i) train.push_back(rng.next_u64() % count);
    for (std::size_t i = 0; i < count - train_count; ++i) test.push_back(rng.next_u64() % count);
    return {train, test};
  }
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  for (std::size_t i = count - 1; i > 0; --i) {
    std::size_t j = rng.next_u64() % (i + 1);
    std::swap(order[i], order[j]);
  }
  train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
  test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
  return {train, test};
}

}  // namespace detail

/// One split of the experiment on realized rows: learn the threshold on the
/// train half (unless fixed), evaluate the test half. Returns nullopt for
/// degenerate splits (a half missing a label class, or test missing a group
/// among its qualified candidates).
inline std::optional<std::map<std::string, double>> pipeline_split(
    const std::vector<ScoreTableRow>& rows, const PipelineOptions& options, RngStream split_rng) {
  auto [train_idx, test_idx] =
      detail::split_indices(rows.size(), options.train_fraction, options.classic_bootstrap, split_rng);

  double tau;
  if (options.fixed_threshold) {
    tau = *options.fixed_threshold;
  } else {
    std::vector<ScoredExample> train;
    train.reserve(train_idx.size());
    bool has_pos = false, has_neg = false;
    for (std::size_t i : train_idx) {
      train.push_back({detail::considered_score(rows[i], options.use_hirer_draws), rows[i].label});
      (rows[i].label == 1 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) return std::nullopt;
    tau = learn_threshold(train, options.epsilon, options.target_fpr).tau_star;
  }

  std::vector<PlayRecord> records;
  std::vector<Candidate> meta;
  records.reserve(test_idx.size());
  meta.reserve(test_idx.size());
  for (std::size_t i : test_idx) {
    const ScoreTableRow& row = rows[i];
    PlayRecord rec;
    rec.candidate_index = meta.size();
    rec.submitted_score = row.play.submitted_score();
    rec.considered_score = detail::considered_score(row, options.use_hirer_draws);
    rec.decision = rec.considered_score >= tau ? 1 : 0;
    rec.draws_used = row.play.draws_used();
    records.push_back(rec);
    meta.push_back(Candidate{{}, row.group, row.label});
  }
  if (records.empty()) return std::nullopt;
  MetricsReport m = evaluate(records, meta);
  // Group rates are the point of the exercise: a split whose test half lacks
  // qualified candidates in either group is degenerate. FPR merely goes
  // unreported when the test half has no negatives.
  if (m.positives_p == 0 || m.positives_u == 0) return std::nullopt;

  std::map<std::string, double> metrics{
      {"tau_star", tau},  {"tpr", m.tpr},           {"tpr_p", m.tpr_p},
      {"tpr_u", m.tpr_u}, {"accuracy", m.accuracy}, {"tpr_disparity", m.tpr_disparity},
  };
  if (m.negatives > 0) metrics["fpr"] = m.fpr;
  return metrics;
}

/// Split-resampled confidence intervals over one scheme's realized rows.
inline BootstrapSummary run_pipeline(const std::vector<ScoreTableRow>& rows,
                                     const PipelineOptions& options, const RngStream& split_stream) {
  if (rows.size() < 2) throw ConfigError("pipeline: need at least two rows");
  return bootstrap_ci(
      [&](std::size_t, RngStream rng) { return pipeline_split(rows, options, rng); },
      options.splits, options.confidence, split_stream);
}

struct SchemeOutcome {
  std::string name;
  int tickets = 0;
  BootstrapSummary summary;
};

struct DisparityCurvePoint {
  int tickets = 0;
  double delta_tpr_abs = 0.0;
  double analytic_envelope = 0.0;
};

struct ExperimentReport {
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<SchemeOutcome> schemes;
  std::vector<DisparityCurvePoint> disparity_curve;
  std::optional<double> contraction_rate;  // max over the probe panel
};

namespace stream_scope {
inline constexpr const char* kPopulation = "population";
inline constexpr const char* kRealize = "realize";
inline constexpr const char* kSplits = "splits";
}  // namespace stream_scope

/// Quantile sweep over the population's feature laws: probe i sits at the
/// (i + 0.5) / count quantile of every marginal.
inline std::vector<FeatureVector> probe_panel(const PopulationSpec& spec, std::size_t count) {
  std::vector<FeatureVector> panel;
  panel.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double u = (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    FeatureVector x;
    for (const auto& law : spec.fundamental_law) x.fundamental.push_back(law.quantile(u));
    for (const auto& law : spec.style_law) x.style.push_back(law.quantile(u));
    panel.push_back(std::move(x));
  }
  return panel;
}

/// Realizes one scheme's games for the whole population. Candidate i draws
/// from stream child i, so realization is independent of worker count.
inline ScoreTable realize_scheme(const SchemeSpec& spec, const std::vector<Candidate>& candidates,
                                 const Scorer& scorer, const RngStream& stream, std::size_t jobs = 1) {
  ScoreTable table;
  table.hirer_draw_columns = spec.hirer_model.is_null() ? 0 : static_cast<std::size_t>(spec.tickets());
  table.rows.resize(candidates.size());
  parallel_for(candidates.size(), jobs, [&](std::size_t i) {
    ScoreTableRow& row = table.rows[i];
    char id[24];
    std::snprintf(id, sizeof(id), "c%08zu", i);
    row.candidate_id = id;
    row.group = candidates[i].group;
    row.label = candidates[i].label;
    row.play = realize_play(spec, candidates[i], scorer, stream.child(i));
  });
  return table;
}

inline ExperimentReport run_experiment(const ExperimentConfig& config, std::size_t jobs = 1) {
  RngStream root(config.seed);
  std::vector<Candidate> population = sample_population(
      config.population, config.population_count, root.child(stream_scope::kPopulation));

  ExperimentReport report;
  report.seed = config.seed;
  report.config_digest = config_digest(config.canonical);

  PipelineOptions options;
  options.splits = config.splits;
  options.train_fraction = config.train_fraction;
  options.confidence = config.confidence;
  options.epsilon = config.epsilon;
  options.target_fpr = config.target_fpr;
  options.classic_bootstrap = config.classic_bootstrap;
  options.use_hirer_draws = true;
  if (config.threshold_mode == ThresholdMode::Fixed) options.fixed_threshold = config.fixed_threshold;

  // The split substream is shared across schemes: split i partitions the
  // candidates identically everywhere, so scheme comparisons are paired.
  RngStream split_stream = root.child(stream_scope::kSplits);
  RngStream realize_stream = root.child(stream_scope::kRealize);

  for (std::size_t s = 0; s < config.schemes.size(); ++s) {
    const SchemeConfig& sc = config.schemes[s];
    SchemeSpec spec;
    spec.kind = sc.kind;
    spec.n = sc.n;
    spec.candidate_models = {config.model_privileged, config.model_unprivileged};
    spec.hirer_model =
        sc.kind == SchemeKind::Traditional ? ManipulationModel::null_model() : config.model_hirer;
    spec.threshold = config.threshold_mode == ThresholdMode::Fixed ? config.fixed_threshold : 0.0;
    spec.validate();

    ScoreTable table = realize_scheme(spec, population, config.scorer, realize_stream.child(s), jobs);
    SchemeOutcome outcome;
    outcome.name = spec.name();
    outcome.tickets = spec.tickets();
    outcome.summary = run_pipeline(table.rows, options, split_stream);
    report.schemes.push_back(std::move(outcome));
  }

  // Disparity decay curve over ticket counts, when the scheme list sweeps n.
  std::vector<const SchemeOutcome*> by_tickets;
  for (const auto& outcome : report.schemes) by_tickets.push_back(&outcome);
  std::sort(by_tickets.begin(), by_tickets.end(),
            [](const SchemeOutcome* a, const SchemeOutcome* b) { return a->tickets < b->tickets; });
  if (by_tickets.size() >= 2) {
    // Contraction coefficient: the worst per-ticket failure probability over
    // the probe panel, max_x P(hirer draw scores below tau).
    auto metric_mean = [](const SchemeOutcome& outcome, const std::string& name) {
      auto it = outcome.summary.metrics.find(name);
      return it == outcome.summary.metrics.end() ? 0.0 : it->second.mean;
    };
    double tau_ref = config.threshold_mode == ThresholdMode::Fixed
                         ? config.fixed_threshold
                         : metric_mean(*by_tickets.front(), "tau_star");
    double k_max = 0.0;
    if (!config.model_hirer.is_null()) {
      for (const auto& x : probe_panel(config.population, 50)) {
        ScoreLaw law = score_law(config.scorer, config.model_hirer, x, tau_ref);
        k_max = std::max(k_max, law.prob_below);
      }
      report.contraction_rate = k_max;
    }
    double anchor = std::abs(metric_mean(*by_tickets.front(), "tpr_disparity"));
    int anchor_tickets = by_tickets.front()->tickets;
    for (const SchemeOutcome* outcome : by_tickets) {
      DisparityCurvePoint point;
      point.tickets = outcome->tickets;
      point.delta_tpr_abs = std::abs(metric_mean(*outcome, "tpr_disparity"));
      point.analytic_envelope = anchor * std::pow(k_max, outcome->tickets - anchor_tickets);
      report.disparity_curve.push_back(point);
    }
  }
  return report;
}

/// Replays an externally produced score table through the same pipeline the
/// simulator uses. Only the traditional and two-ticket schemes are replayable;
/// the table is the realization.
inline BootstrapSummary replay(const ScoreTable& table, SchemeKind scheme, double epsilon,
                               double train_fraction, std::size_t splits, std::uint64_t seed,
                               double confidence = 0.95, double target_fpr = 0.0) {
  if (scheme != SchemeKind::Traditional && scheme != SchemeKind::TwoTicket)
    throw ConfigError("replay: only traditional and two_ticket schemes can be replayed");
  if (scheme == SchemeKind::TwoTicket && table.hirer_draw_columns == 0)
    throw ConfigError("replay: two_ticket requested but the table has no hirer_draw_1 column");
  bool has_pos = false, has_neg = false;
  for (const auto& row : table.rows) (row.label == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw ConfigError("replay: table must contain both labels");

  PipelineOptions options;
  options.splits = splits;
  options.train_fraction = train_fraction;
  options.confidence = confidence;
  options.epsilon = epsilon;
  options.target_fpr = target_fpr;
  options.use_hirer_draws = scheme == SchemeKind::TwoTicket;
  RngStream root(seed);
  return run_pipeline(table.rows, options, root.child(stream_scope::kSplits));
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline json summary_to_json(const BootstrapSummary& summary) {
  json metrics = json::object();
  for (const auto& [name, s] : summary.metrics)
    metrics[name] = {{"mean", s.mean}, {"half_width", s.half_width}};
  return {{"metrics", metrics},
          {"splits_used", summary.splits_used},
          {"splits_skipped", summary.splits_skipped},
          {"confidence", summary.confidence}};
}

inline json report_to_json(const ExperimentReport& report) {
  json schemes = json::array();
  for (const auto& outcome : report.schemes) {
    json node = summary_to_json(outcome.summary);
    node["scheme"] = outcome.name;
    node["tickets"] = outcome.tickets;
    schemes.push_back(node);
  }
  json out = {{"seed", report.seed}, {"config_digest", report.config_digest}, {"schemes", schemes}};
  if (!report.disparity_curve.empty()) {
    json curve = json::array();
    for (const auto& point : report.disparity_curve)
      curve.push_back({{"n", point.tickets},
                       {"delta_tpr_abs", point.delta_tpr_abs},
                       {"analytic_envelope", point.analytic_envelope}});
    out["disparity_curve"] = curve;
    if (report.contraction_rate) out["contraction_rate"] = *report.contraction_rate;
  }
  return out;
}

inline const std::vector<std::string>& metric_column_order() {
  static const std::vector<std::string> order = {"tau_star", "tpr",      "tpr_p",        "tpr_u",
                                                 "fpr",      "accuracy", "tpr_disparity"};
  return order;
}

inline std::string metrics_csv(const ExperimentReport& report) {
  std::string out = "scheme,tickets";
  for (const auto& name : metric_column_order()) out += "," + name + "_mean," + name + "_half_width";
  out += ",splits_used,splits_skipped\n";
  for (const auto& outcome : report.schemes) {
    out += outcome.name + "," + std::to_string(outcome.tickets);
    for (const auto& name : metric_column_order()) {
      const auto it = outcome.summary.metrics.find(name);
      if (it == outcome.summary.metrics.end()) {
        out += ",,";
        continue;
      }
      out += "," + csv::format_double(it->second.mean) + "," + csv::format_double(it->second.half_width);
    }
    out += "," + std::to_string(outcome.summary.splits_used) + "," +
           std::to_string(outcome.summary.splits_skipped) + "\n";
  }
  return out;
}

inline std::string disparity_curve_csv(const ExperimentReport& report) {
  std::string out = "n,delta_tpr_abs,analytic_envelope\n";
  for (const auto& point : report.disparity_curve)
    out += std::to_string(point.tickets) + "," + csv::format_double(point.delta_tpr_abs) + "," +
           csv::format_double(point.analytic_envelope) + "\n";
  return out;
}

/// Writes report.json / metrics.csv / disparity_curve.csv / run_meta.json
/// into the run directory. Purely a function of the report, so identical
/// runs produce byte-identical artifacts.
inline void write_report_files(const ExperimentReport& report, const std::string& directory,
                               OutputFormat format) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  auto write = [&](const std::string& name, const std::string& contents) {
    std::ofstream out(fs::path(directory) / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + name + " in " + directory);
    out << contents;
  };
  if (format != OutputFormat::Csv) write("report.json", report_to_json(report).dump(2) + "\n");
  if (format != OutputFormat::Json) {
    write("metrics.csv", metrics_csv(report));
    if (!report.disparity_curve.empty()) write("disparity_curve.csv", disparity_curve_csv(report));
  }
  json meta = {{"seed", report.seed},
               {"config_digest", report.config_digest},
               {"version", "1.0.0"},
               {"generator", "hiresim"}};
  write("run_meta.json", meta.dump(2) + "\n");
}

}  // namespace hiresim
