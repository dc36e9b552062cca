#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hiresim/core_model.hpp"
#include "hiresim/errors.hpp"
#include "hiresim/manipulation.hpp"
#include "hiresim/rng.hpp"
#include "hiresim/scoring.hpp"

namespace hiresim {

enum class SchemeKind { Traditional, TwoTicket, NTicket };

inline const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::Traditional: return "traditional";
    case SchemeKind::TwoTicket: return "two_ticket";
    case SchemeKind::NTicket: return "n_ticket";
  }
  return "?";
}

struct GroupModels {
  ManipulationModel privileged = ManipulationModel::null_model();
  ManipulationModel unprivileged = ManipulationModel::null_model();

  const ManipulationModel& for_group(Group g) const {
    return g == Group::P ? privileged : unprivileged;
  }
};

/// Which game is played. Traditional is the null-hirer special case and
/// TwoTicket is NTicket with a single hirer pass.
struct SchemeSpec {
  SchemeKind kind = SchemeKind::Traditional;
  ManipulationModel hirer_model = ManipulationModel::null_model();
  GroupModels candidate_models;
  double threshold = 0.0;
  int n = 1;  // NTicket only

  /// Hirer ticket applications after submission.
  int tickets() const {
    switch (kind) {
      case SchemeKind::Traditional: return 0;
      case SchemeKind::TwoTicket: return 1;
      case SchemeKind::NTicket: return n;
    }
    return 0;
  }

  std::string name() const {
    if (kind == SchemeKind::NTicket) return "n_ticket_" + std::to_string(n);
    return to_string(kind);
  }

  void validate() const {
    if (!std::isfinite(threshold)) throw ConfigError("scheme: threshold must be finite");
    if (kind == SchemeKind::Traditional && !hirer_model.is_null())
      throw ConfigError("scheme: traditional hiring requires the null hirer model");
    if (kind != SchemeKind::Traditional && hirer_model.is_null())
      throw ConfigError("scheme: a null hirer model is traditional hiring; declare it as such");
    if (kind == SchemeKind::NTicket && n < 1)
      throw ConfigError("scheme: n_ticket requires n >= 1");
  }
};

struct PlayRecord {
  std::size_t candidate_index = 0;
  double submitted_score = 0.0;   // the candidate's best-response score
  double considered_score = 0.0;  // max over submitted and all hirer tickets
  int decision = 0;
  int draws_used = 0;  // stochastic manipulation draws consumed
};

struct BestResponse {
  FeatureVector submitted;
  double score = 0.0;
  bool used_manipulation = false;
};

/// One manipulation draw, then the argmax over {original, draw}.
/// Ties go to the original resume; the null model always loses.
inline BestResponse best_response(const Candidate& candidate, const ManipulationModel& model,
                                  const Scorer& scorer, RngStream& rng) {
  BestResponse r;
  double original_score = scorer.score(candidate.features);
  auto manipulated = model.apply(candidate.features, rng);
  double manipulated_score = scorer.score(manipulated);
  if (manipulated_score > original_score) {
    r.submitted = *manipulated;
    r.score = manipulated_score;
    r.used_manipulation = true;
  } else {
    r.submitted = candidate.features;
    r.score = original_score;
  }
  return r;
}

namespace stream_label {
inline constexpr std::uint64_t kCandidateDraw = 0;
inline constexpr std::uint64_t kHirerDraws = 1;
}  // namespace stream_label

/// The realized randomness of one game, kept as scores. Thresholding a
/// realized play is a pure function, which is what lets a dumped score table
/// replay to the exact same decisions.
struct RealizedPlay {
  double original_score = 0.0;
  std::optional<double> candidate_draw_score;  // absent when the group model is null
  std::vector<double> hirer_draw_scores;       // one per non-null hirer ticket

  double submitted_score() const {
    return candidate_draw_score && *candidate_draw_score > original_score ? *candidate_draw_score
                                                                          : original_score;
  }

  double considered_score() const {
    double best = submitted_score();
    for (double s : hirer_draw_scores) best = std::max(best, s);
    return best;
  }

  int draws_used() const {
    return static_cast<int>(hirer_draw_scores.size()) + (candidate_draw_score ? 1 : 0);
  }
};

/// Realizes one candidate's game on a dedicated stream: the candidate's own
/// manipulation draw, then the hirer tickets. Hirer tickets re-manipulate the
/// submitted resume; overwrite semantics make them i.i.d. given the
/// candidate's fundamental block, which is the conditional independence the
/// acceptance-probability factorization needs.
inline RealizedPlay realize_play(const SchemeSpec& spec, const Candidate& candidate,
                                 const Scorer& scorer, const RngStream& stream) {
  RealizedPlay play;
  play.original_score = scorer.score(candidate.features);
  const ManipulationModel& own = spec.candidate_models.for_group(candidate.group);
  RngStream candidate_rng = stream.child(stream_label::kCandidateDraw);
  auto manipulated = own.apply(candidate.features, candidate_rng);
  if (manipulated) play.candidate_draw_score = scorer.score(*manipulated);

  const FeatureVector& submitted =
      play.candidate_draw_score && *play.candidate_draw_score > play.original_score
          ? *manipulated
          : candidate.features;
  RngStream hirer_rng = stream.child(stream_label::kHirerDraws);
  for (int t = 0; t < spec.tickets(); ++t) {
    if (spec.hirer_model.is_null()) continue;
    RngStream ticket_rng = hirer_rng.child(static_cast<std::uint64_t>(t));
    auto drawn = spec.hirer_model.apply(submitted, ticket_rng);
    play.hirer_draw_scores.push_back(scorer.score(drawn));
  }
  return play;
}

inline PlayRecord to_record(const RealizedPlay& play, double threshold, std::size_t index = 0) {
  PlayRecord rec;
  rec.candidate_index = index;
  rec.submitted_score = play.submitted_score();
  rec.considered_score = play.considered_score();
  rec.decision = rec.considered_score >= threshold ? 1 : 0;
  rec.draws_used = play.draws_used();
  return rec;
}

/// Plays one full game for one candidate on a dedicated stream.
inline PlayRecord play_one(const SchemeSpec& spec, const Candidate& candidate, const Scorer& scorer,
                           const RngStream& stream, std::size_t index = 0) {
  return to_record(realize_play(spec, candidate, scorer, stream), spec.threshold, index);
}

inline std::vector<PlayRecord> play(const SchemeSpec& spec, const std::vector<Candidate>& candidates,
                                    const Scorer& scorer, const RngStream& stream) {
  spec.validate();
  std::vector<PlayRecord> records(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    records[i] = play_one(spec, candidates[i], scorer, stream.child(i), i);
  return records;
}

struct McEstimate {
  double p_hat = 0.0;
  double std_error = 0.0;
};

/// Acceptance probability over independent full-game replications (fresh
/// candidate manipulation draw and fresh hirer draws each time).
inline McEstimate acceptance_probability_mc(const SchemeSpec& spec, const Candidate& candidate,
                                            const Scorer& scorer, std::size_t replications,
                                            const RngStream& stream) {
  spec.validate();
  if (replications < 1) throw ConfigError("acceptance_probability_mc: replications must be >= 1");
  std::size_t accepted = 0;
  for (std::size_t r = 0; r < replications; ++r)
    accepted += static_cast<std::size_t>(play_one(spec, candidate, scorer, stream.child(r)).decision);
  double p = static_cast<double>(accepted) / static_cast<double>(replications);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(replications))};
}

struct AcceptanceProbability {
  double value = 0.0;
  bool exact = true;  // both score-law factors exact
};

/// Closed-form acceptance probability
///   1 - 1[s(x) < tau] * P(s(L_g(x)) < tau) * P(s(L_H(x)) < tau)^n.
inline AcceptanceProbability acceptance_probability_analytic(const SchemeSpec& spec,
                                                             const Candidate& candidate,
                                                             const Scorer& scorer) {
  spec.validate();
  if (scorer.score(candidate.features) >= spec.threshold) return {1.0, true};
  const ManipulationModel& own = spec.candidate_models.for_group(candidate.group);
  ScoreLaw own_law = score_law(scorer, own, candidate.features, spec.threshold);
  double fail = own_law.prob_below;
  bool exact = own_law.method == ScoreLawMethod::Exact;
  if (spec.tickets() > 0) {
    ScoreLaw hirer_law = score_law(scorer, spec.hirer_model, candidate.features, spec.threshold);
    fail *= std::pow(hirer_law.prob_below, spec.tickets());
    exact = exact && hirer_law.method == ScoreLawMethod::Exact;
  }
  return {1.0 - fail, exact};
}

/// Per-ticket acceptance dynamics: T(z) = z + h(1 - z) with contraction
/// coefficient k = 1 - h and closed form T^n(z) = 1 - (1 - h)^n (1 - z).
struct NTicketDynamics {
  double hirer_pass_prob = 0.0;        // h
  double contraction_rate = 1.0;       // k = 1 - h
  double baseline_raw = 0.0;           // P(s(L_g(x)) >= tau), the proof's group baseline
  double baseline_best_response = 0.0; // 1 when the original already passes
  int outcome_limit = 0;
  bool exact = true;

  double step(double z) const { return z + hirer_pass_prob * (1.0 - z); }

  double iterate(double z, int n) const {
    for (int i = 0; i < n; ++i) z = step(z);
    return z;
  }

  double closed_form(double z, int n) const {
    return 1.0 - std::pow(1.0 - hirer_pass_prob, n) * (1.0 - z);
  }

  double trajectory(int n) const { return closed_form(baseline_raw, n); }

  /// Banach bound on the distance to the limit, valid when h > 0.
  double bound(double z, int n) const {
    return std::pow(contraction_rate, n) * (1.0 - z);
  }
};

inline NTicketDynamics nticket_dynamics(const Candidate& candidate,
                                        const ManipulationModel& group_model,
                                        const ManipulationModel& hirer_model, const Scorer& scorer,
                                        double tau) {
  NTicketDynamics dyn;
  ScoreLaw hirer_law = score_law(scorer, hirer_model, candidate.features, tau);
  ScoreLaw group_law = score_law(scorer, group_model, candidate.features, tau);
  dyn.hirer_pass_prob = 1.0 - hirer_law.prob_below;
  dyn.contraction_rate = hirer_law.prob_below;
  dyn.baseline_raw = 1.0 - group_law.prob_below;
  const bool original_passes = scorer.score(candidate.features) >= tau;
  dyn.baseline_best_response = original_passes ? 1.0 : dyn.baseline_raw;
  dyn.outcome_limit = (dyn.hirer_pass_prob > 0.0 || original_passes) ? 1 : 0;
  dyn.exact =
      hirer_law.method == ScoreLawMethod::Exact && group_law.method == ScoreLawMethod::Exact;
  return dyn;
}

}  // namespace hiresim
