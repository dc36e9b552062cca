#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hiresim/core_model.hpp"
#include "hiresim/errors.hpp"
#include "hiresim/manipulation.hpp"
#include "hiresim/rng.hpp"
#include "hiresim/scoring.hpp"

namespace hiresim {

struct ScoredExample {
  double score = 0.0;
  int label = 0;
};

/// Per-channel maxima behind a learned threshold, in the notation of the
/// threshold-consistency analysis: unmanipulated negatives (M), per-group
/// manipulated negatives (M_P, M_U) and hirer-manipulated negatives (M_H).
struct ChannelMaxima {
  double unmanipulated = -std::numeric_limits<double>::infinity();
  double privileged = -std::numeric_limits<double>::infinity();
  double unprivileged = -std::numeric_limits<double>::infinity();
  std::vector<double> hirer;
};

struct ThresholdDerivation {
  double tau_star = -std::numeric_limits<double>::infinity();
  double max_negative_score = -std::numeric_limits<double>::infinity();
  double epsilon = 0.0;
  double target_fpr = 0.0;
  bool accept_all = false;  // no negatives were present
  double tpr_at_tau = 0.0;  // on the training sample
  double fpr_at_tau = 0.0;
  std::optional<ChannelMaxima> components;
};

namespace detail {

// max_neg + eps, with a one-ulp guard for when eps underflows at that magnitude.
inline double exceed(double max_neg, double epsilon) {
  double tau = max_neg + epsilon;
  if (tau <= max_neg) tau = std::nextafter(max_neg, std::numeric_limits<double>::infinity());
  return tau;
}

}  // namespace detail

/// Finite-sample No-False-Positives threshold: the smallest threshold that
/// strictly exceeds every negative considered score (so FPR is exactly zero
/// under the closed accept-if-score>=tau boundary) while maximizing TPR.
/// target_fpr > 0 relaxes the constraint to FPR <= target_fpr.
inline ThresholdDerivation learn_threshold(const std::vector<ScoredExample>& scored, double epsilon,
                                           double target_fpr = 0.0) {
  if (scored.empty()) throw ConfigError("learn_threshold: no scored examples");
  if (!(epsilon > 0.0)) throw ConfigError("learn_threshold: epsilon must be > 0");
  if (target_fpr < 0.0 || target_fpr >= 1.0)
    throw ConfigError("learn_threshold: target_fpr must lie in [0, 1)");

  std::vector<double> negatives;
  std::size_t positives = 0;
  for (const auto& ex : scored) {
    if (!std::isfinite(ex.score)) throw ConfigError("learn_threshold: scores must be finite");
    if (ex.label == 0) negatives.push_back(ex.score);
    else ++positives;
  }

  ThresholdDerivation d;
  d.epsilon = epsilon;
  d.target_fpr = target_fpr;

  if (negatives.empty()) {
    d.accept_all = true;
    d.tau_star = -std::numeric_limits<double>::infinity();
    d.tpr_at_tau = positives > 0 ? 1.0 : 0.0;
    return d;
  }

  std::sort(negatives.begin(), negatives.end(), std::greater<>());
  d.max_negative_score = negatives.front();

  const auto allowed = static_cast<std::size_t>(target_fpr * static_cast<double>(negatives.size()));
  if (allowed >= negatives.size()) {
    d.accept_all = true;
    d.tau_star = -std::numeric_limits<double>::infinity();
  } else {
    d.tau_star = detail::exceed(negatives[allowed], epsilon);
  }

  std::size_t tp = 0, fp = 0;
  for (const auto& ex : scored) {
    if (ex.score >= d.tau_star) (ex.label == 1 ? tp : fp)++;
  }
  d.tpr_at_tau = positives > 0 ? static_cast<double>(tp) / static_cast<double>(positives) : 0.0;
  d.fpr_at_tau = static_cast<double>(fp) / static_cast<double>(negatives.size());
  return d;
}

struct SchemeThreshold {
  std::string scheme;
  double tau_star = 0.0;
};

struct ConsistencyReport {
  ChannelMaxima maxima;
  std::vector<SchemeThreshold> thresholds;  // traditional first, then one per hirer model
  double max_abs_difference = 0.0;
  bool lemma_asserted = false;
  double tolerance = 0.0;
  bool consistent = true;
};

/// Estimates the channel maxima over the negative candidates and the per-
/// scheme thresholds they induce. When `assert_lemma` is set, the privileged
/// model must analytically dominate every hirer model (the sufficient
/// condition for scheme-independent thresholds) and an empirical excess of
/// any hirer channel beyond `tolerance` raises a LemmaViolationError.
inline ConsistencyReport check_threshold_consistency(
    const Scorer& scorer, const std::vector<Candidate>& population, const ManipulationModel& model_p,
    const ManipulationModel& model_u, const std::vector<ManipulationModel>& hirer_models,
    std::size_t draws_per_channel, double epsilon, const RngStream& stream,
    bool assert_lemma = false, double tolerance = 0.0) {
  if (population.empty()) throw DiagnosticError("threshold consistency: empty population");
  if (draws_per_channel < 1) throw ConfigError("threshold consistency: draws_per_channel must be >= 1");

  if (assert_lemma) {
    for (const auto& hirer : hirer_models) {
      if (!dominates_analytic(model_p, hirer).dominates_or_equal())
        throw ContractError(
            "threshold consistency: lemma asserted but the privileged model does not dominate a hirer model");
    }
  }

  ConsistencyReport report;
  report.lemma_asserted = assert_lemma;
  report.tolerance = tolerance;
  report.maxima.hirer.assign(hirer_models.size(), -std::numeric_limits<double>::infinity());

  bool any_negative = false;
  for (std::size_t i = 0; i < population.size(); ++i) {
    const Candidate& c = population[i];
    if (c.label != 0) continue;
    any_negative = true;
    RngStream sub = stream.child(i);
    report.maxima.unmanipulated = std::max(report.maxima.unmanipulated, scorer.score(c.features));
    RngStream p_rng = sub.child("p");
    RngStream u_rng = sub.child("u");
    for (std::size_t k = 0; k < draws_per_channel; ++k) {
      RngStream pk = p_rng.child(k);
      RngStream uk = u_rng.child(k);
      report.maxima.privileged = std::max(report.maxima.privileged, scorer.score(model_p.apply(c.features, pk)));
      report.maxima.unprivileged =
          std::max(report.maxima.unprivileged, scorer.score(model_u.apply(c.features, uk)));
    }
    for (std::size_t h = 0; h < hirer_models.size(); ++h) {
      RngStream h_rng = sub.child("h").child(h);
      for (std::size_t k = 0; k < draws_per_channel; ++k) {
        RngStream hk = h_rng.child(k);
        report.maxima.hirer[h] =
            std::max(report.maxima.hirer[h], scorer.score(hirer_models[h].apply(c.features, hk)));
      }
    }
  }
  if (!any_negative) throw DiagnosticError("threshold consistency: no negative candidates");

  const double base_max = std::max(
      {report.maxima.unmanipulated, report.maxima.privileged, report.maxima.unprivileged});
  report.thresholds.push_back({"traditional", detail::exceed(base_max, epsilon)});
  for (std::size_t h = 0; h < hirer_models.size(); ++h) {
    double tau = detail::exceed(std::max(base_max, report.maxima.hirer[h]), epsilon);
    report.thresholds.push_back({"two_ticket_hirer_" + std::to_string(h), tau});
  }
  for (const auto& a : report.thresholds)
    for (const auto& b : report.thresholds)
      report.max_abs_difference = std::max(report.max_abs_difference, std::abs(a.tau_star - b.tau_star));

  report.consistent = report.max_abs_difference <= tolerance;
  if (assert_lemma) {
    for (std::size_t h = 0; h < hirer_models.size(); ++h) {
      if (report.maxima.hirer[h] > report.maxima.privileged + tolerance)
        throw LemmaViolationError(
            "threshold consistency: hirer channel maximum exceeds the privileged channel beyond tolerance");
    }
    if (!report.consistent)
      throw LemmaViolationError("threshold consistency: thresholds differ across schemes beyond tolerance");
  }
  return report;
}

}  // namespace hiresim
