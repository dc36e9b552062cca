#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hiresim/core_model.hpp"
#include "hiresim/errors.hpp"
#include "hiresim/rng.hpp"
#include "hiresim/schemes.hpp"
#include "hiresim/stats.hpp"

namespace hiresim {

struct MetricsReport {
  double tpr_p = 0.0;
  double tpr_u = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double accuracy = 0.0;
  double tpr_disparity = 0.0;  // TPR_P - TPR_U
  bool group_rates_defined = true;
  std::size_t count = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t positives_p = 0;
  std::size_t positives_u = 0;
};

/// Exact counting over play records joined with candidate group/label.
inline MetricsReport evaluate(const std::vector<PlayRecord>& records,
                              const std::vector<Candidate>& candidates) {
  if (records.empty()) throw DiagnosticError("evaluate: no records");
  MetricsReport m;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t pos_p = 0, pos_u = 0, tp_p = 0, tp_u = 0;
  for (const auto& rec : records) {
    const Candidate& c = candidates.at(rec.candidate_index);
    if (c.label == 1) {
      (rec.decision == 1 ? tp : fn)++;
      if (c.group == Group::P) {
        ++pos_p;
        tp_p += rec.decision;
      } else {
        ++pos_u;
        tp_u += rec.decision;
      }
    } else {
      (rec.decision == 1 ? fp : tn)++;
    }
  }
  m.count = records.size();
  m.positives = tp + fn;
  m.negatives = fp + tn;
  m.positives_p = pos_p;
  m.positives_u = pos_u;
  m.tpr = m.positives > 0 ? static_cast<double>(tp) / static_cast<double>(m.positives) : 0.0;
  m.fpr = m.negatives > 0 ? static_cast<double>(fp) / static_cast<double>(m.negatives) : 0.0;
  m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(m.count);
  m.group_rates_defined = pos_p > 0 && pos_u > 0 && m.positives > 0 && m.negatives > 0;
  m.tpr_p = pos_p > 0 ? static_cast<double>(tp_p) / static_cast<double>(pos_p) : 0.0;
  m.tpr_u = pos_u > 0 ? static_cast<double>(tp_u) / static_cast<double>(pos_u) : 0.0;
  m.tpr_disparity = m.tpr_p - m.tpr_u;
  return m;
}

enum class DisparityMode { Analytic, MonteCarlo };

/// Resume outcome disparity for a fixed unmanipulated resume: the privileged
/// acceptance probability minus the unprivileged one under the same scheme
/// and threshold.
inline double resume_outcome_disparity(const FeatureVector& x, const SchemeSpec& spec,
                                       const Scorer& scorer,
                                       DisparityMode mode = DisparityMode::Analytic,
                                       std::size_t replications = 10000,
                                       std::optional<RngStream> stream = std::nullopt) {
  Candidate as_p{x, Group::P, 1};
  Candidate as_u{x, Group::U, 1};
  if (mode == DisparityMode::Analytic) {
    return acceptance_probability_analytic(spec, as_p, scorer).value -
           acceptance_probability_analytic(spec, as_u, scorer).value;
  }
  RngStream rng = stream.value_or(RngStream(0x0d15b0a7ceULL));
  return acceptance_probability_mc(spec, as_p, scorer, replications, rng.child("p")).p_hat -
         acceptance_probability_mc(spec, as_u, scorer, replications, rng.child("u")).p_hat;
}

struct MetricSummary {
  double mean = 0.0;
  double half_width = 0.0;  // z * sd / sqrt(splits)
};

struct BootstrapSummary {
  std::map<std::string, MetricSummary> metrics;
  std::size_t splits_used = 0;
  std::size_t splits_skipped = 0;
  double confidence = 0.0;
};

/// Runs `experiment` once per split on a dedicated child stream and reports a
/// normal-approximation confidence interval per metric. The closure may
/// return nullopt to mark a degenerate split; those are skipped and counted.
inline BootstrapSummary bootstrap_ci(
    const std::function<std::optional<std::map<std::string, double>>(std::size_t, RngStream)>& experiment,
    std::size_t splits, double confidence, const RngStream& stream) {
  if (splits < 2) throw ConfigError("bootstrap_ci: splits must be >= 2");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw ConfigError("bootstrap_ci: confidence must lie in (0, 1)");

  std::map<std::string, std::vector<double>> samples;
  BootstrapSummary summary;
  summary.confidence = confidence;
  for (std::size_t i = 0; i < splits; ++i) {
    auto result = experiment(i, stream.child(i));
    if (!result) {
      ++summary.splits_skipped;
      continue;
    }
    ++summary.splits_used;
    for (const auto& [name, value] : *result) samples[name].push_back(value);
  }
  if (summary.splits_used < 2) throw DiagnosticError("bootstrap_ci: fewer than two usable splits");

  const double z = stats::normal_quantile(0.5 + confidence / 2.0);
  for (auto& [name, values] : samples) {
    MetricSummary s;
    s.mean = stats::mean(values);
    s.half_width = z * stats::stddev(values) / std::sqrt(static_cast<double>(values.size()));
    summary.metrics[name] = s;
  }
  return summary;
}

struct GeometricFit {
  double rate = 0.0;  // k_hat = exp(slope of log|delta| vs n)
  double r_squared = 0.0;
  bool already_converged = false;
  std::size_t points_used = 0;
};

/// Least-squares fit of log|disparity| against n. Points at exactly zero are
/// excluded; if none remain the sequence is flagged as already converged.
inline GeometricFit fit_geometric_decay(const std::vector<std::pair<int, double>>& sequence) {
  std::vector<double> xs, ys;
  for (const auto& [n, value] : sequence) {
    double v = std::abs(value);
    if (v > 0.0) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(v));
    }
  }
  GeometricFit fit;
  fit.points_used = xs.size();
  if (xs.empty()) {
    fit.already_converged = true;
    return fit;
  }
  if (xs.size() < 3) throw DiagnosticError("fit_geometric_decay: need at least 3 nonzero points");
  auto ls = stats::least_squares(xs, ys);
  fit.rate = std::exp(ls.slope);
  fit.r_squared = ls.r_squared;
  return fit;
}

}  // namespace hiresim
