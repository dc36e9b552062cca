#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "hiresim/core_model.hpp"
#include "hiresim/distribution.hpp"
#include "hiresim/errors.hpp"
#include "hiresim/rng.hpp"

namespace hiresim {

/// A stochastic resume manipulation: overwrites the style block from its own
/// law and preserves the fundamental block bitwise. The null model stands for
/// "no LLM access" and yields no output at all; downstream scorers treat that
/// as minus infinity.
class ManipulationModel {
 public:
  enum class Kind { Null, Parametric };

  static ManipulationModel null_model() { return ManipulationModel(); }

  static ManipulationModel parametric(std::vector<ScalarDistribution> style_marginals) {
    ManipulationModel m;
    m.kind_ = Kind::Parametric;
    m.style_marginals_ = std::move(style_marginals);
    return m;
  }

  /// Parametric model with correlated style features. Excluded from analytic
  /// dominance (verdict Unknown).
  static ManipulationModel with_joint_sampler(std::size_t style_dims,
                                              std::function<std::vector<double>(RngStream&)> sampler) {
    ManipulationModel m;
    m.kind_ = Kind::Parametric;
    m.joint_dims_ = style_dims;
    m.joint_sampler_ = std::move(sampler);
    return m;
  }

  Kind kind() const { return kind_; }
  bool is_null() const { return kind_ == Kind::Null; }
  bool has_joint_sampler() const { return static_cast<bool>(joint_sampler_); }
  std::size_t style_dims() const { return joint_sampler_ ? joint_dims_ : style_marginals_.size(); }
  const std::vector<ScalarDistribution>& style_marginals() const { return style_marginals_; }

  /// One manipulation draw. Null model -> nullopt (the NullOutput sentinel).
  std::optional<FeatureVector> apply(const FeatureVector& input, RngStream& rng) const {
    if (is_null()) return std::nullopt;
    if (input.style.size() != style_dims())
      throw ConfigError("manipulation: input style dimensions do not match the model");
    FeatureVector out;
    out.fundamental = input.fundamental;  // preserved exactly
    if (joint_sampler_) {
      out.style = joint_sampler_(rng);
      if (out.style.size() != joint_dims_)
        throw ConfigError("manipulation: joint sampler returned wrong style dimensions");
    } else {
      out.style.reserve(style_marginals_.size());
      for (const auto& marginal : style_marginals_) out.style.push_back(marginal.sample(rng));
    }
    return out;
  }

 private:
  ManipulationModel() = default;
  Kind kind_ = Kind::Null;
  std::vector<ScalarDistribution> style_marginals_;
  std::function<std::vector<double>(RngStream&)> joint_sampler_;
  std::size_t joint_dims_ = 0;
};

enum class DominanceRelation { Dominates, DominatedBy, Equivalent, Incomparable, Unknown };

inline const char* to_string(DominanceRelation r) {
  switch (r) {
    case DominanceRelation::Dominates: return "Dominates";
    case DominanceRelation::DominatedBy: return "DominatedBy";
    case DominanceRelation::Equivalent: return "Equivalent";
    case DominanceRelation::Incomparable: return "Incomparable";
    case DominanceRelation::Unknown: return "Unknown";
  }
  return "?";
}

enum class DominanceMethod { Analytic, EmpiricalCdf };

struct DominanceVerdict {
  DominanceRelation relation = DominanceRelation::Unknown;
  DominanceMethod method = DominanceMethod::Analytic;
  std::optional<double> witness;  // point where the claimed CDF ordering fails
  double tolerance = 0.0;         // EmpiricalCdf only
  std::size_t sample_size = 0;    // EmpiricalCdf only

  bool dominates_or_equal() const {
    return relation == DominanceRelation::Dominates || relation == DominanceRelation::Equivalent;
  }
};

/// Exact dominance verdict for catalog models. With independent marginals,
/// componentwise first-order dominance gives a monotone coupling and hence
/// multivariate dominance; joint-sampler models fall back to Unknown.
inline DominanceVerdict dominates_analytic(const ManipulationModel& a, const ManipulationModel& b) {
  DominanceVerdict v;
  v.method = DominanceMethod::Analytic;
  if (a.is_null() && b.is_null()) {
    v.relation = DominanceRelation::Equivalent;
    return v;
  }
  if (a.is_null()) {
    v.relation = DominanceRelation::DominatedBy;
    return v;
  }
  if (b.is_null()) {
    v.relation = DominanceRelation::Dominates;
    return v;
  }
  if (a.has_joint_sampler() || b.has_joint_sampler()) {
    v.relation = DominanceRelation::Unknown;
    return v;
  }
  if (a.style_dims() != b.style_dims())
    throw ConfigError("dominates_analytic: models have different style dimensions");

  bool all_ge = true, all_le = true;
  for (std::size_t d = 0; d < a.style_dims(); ++d) {
    auto cmp = compare_fosd(a.style_marginals()[d], b.style_marginals()[d]);
    switch (cmp.order) {
      case ScalarOrder::Equivalent:
        break;
      case ScalarOrder::Dominates:
        all_le = false;
        break;
      case ScalarOrder::DominatedBy:
        all_ge = false;
        break;
      case ScalarOrder::Incomparable:
        all_ge = all_le = false;
        if (!v.witness) v.witness = cmp.witness;
        break;
    }
    if (!all_ge && !all_le) break;
  }
  if (all_ge && all_le) v.relation = DominanceRelation::Equivalent;
  else if (all_ge) v.relation = DominanceRelation::Dominates;
  else if (all_le) v.relation = DominanceRelation::DominatedBy;
  else v.relation = DominanceRelation::Incomparable;
  return v;
}

/// Empirical univariate dominance on samples (score space): `a` dominates `b`
/// iff the ECDF of a stays below the ECDF of b plus epsilon everywhere on the
/// merged support.
inline DominanceVerdict dominates_empirical(const std::vector<double>& a_samples,
                                            const std::vector<double>& b_samples, double epsilon) {
  if (a_samples.empty() || b_samples.empty())
    throw DiagnosticError("dominates_empirical: empty sample list");
  if (epsilon < 0.0) throw ConfigError("dominates_empirical: tolerance must be >= 0");

  std::vector<double> a = a_samples, b = b_samples;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> support;
  support.reserve(a.size() + b.size());
  support.insert(support.end(), a.begin(), a.end());
  support.insert(support.end(), b.begin(), b.end());
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());

  double worst_a_over_b = 0.0, worst_b_over_a = 0.0;
  double witness_ab = 0.0, witness_ba = 0.0;
  for (double x : support) {
    double fa = stats::ecdf_at(a, x);
    double fb = stats::ecdf_at(b, x);
    if (fa - fb > worst_a_over_b) {
      worst_a_over_b = fa - fb;
      witness_ab = x;
    }
    if (fb - fa > worst_b_over_a) {
      worst_b_over_a = fb - fa;
      witness_ba = x;
    }
  }

  DominanceVerdict v;
  v.method = DominanceMethod::EmpiricalCdf;
  v.tolerance = epsilon;
  v.sample_size = std::min(a.size(), b.size());
  const bool a_dominates = worst_a_over_b <= epsilon;  // F_a <= F_b + eps everywhere
  const bool b_dominates = worst_b_over_a <= epsilon;
  if (a_dominates && b_dominates) v.relation = DominanceRelation::Equivalent;
  else if (a_dominates) v.relation = DominanceRelation::Dominates;
  else if (b_dominates) { v.relation = DominanceRelation::DominatedBy; v.witness = witness_ab; }
  else { v.relation = DominanceRelation::Incomparable; v.witness = witness_ab; }
  return v;
}

/// A non-decreasing step function of the style block: a non-negative
/// combination of upper-orthant indicators.
struct MonotoneStepUtility {
  std::vector<std::vector<double>> thresholds;  // one corner per step
  std::vector<double> weights;                  // non-negative

  double operator()(const std::vector<double>& style) const {
    double value = 0.0;
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      bool above = true;
      for (std::size_t d = 0; d < thresholds[k].size(); ++d) {
        if (style[d] < thresholds[k][d]) {
          above = false;
          break;
        }
      }
      if (above) value += weights[k];
    }
    return value;
  }
};

struct UtilityGap {
  double gap = 0.0;  // mean u(a draw) - mean u(b draw)
  double std_error = 0.0;
};

struct UtilityDominanceReport {
  bool pass = true;
  std::vector<UtilityGap> gaps;  // one per generated utility
  std::size_t violations = 0;
  std::size_t trials = 0;
};

/// Monte Carlo check of the dominance-utility equivalence: for the dominant
/// model a and every generated non-decreasing u, E[u(a(x))] >= E[u(b(x))].
/// Draws are coupled through shared uniforms and the marginal quantile
/// functions, so a true verdict gives pointwise-ordered samples while a wrong
/// verdict shows up as negative gaps.
inline UtilityDominanceReport utility_dominance_check(const ManipulationModel& a,
                                                      const ManipulationModel& b,
                                                      const FeatureVector& input, std::size_t trials,
                                                      std::size_t utilities, RngStream rng) {
  auto verdict = dominates_analytic(a, b);
  if (verdict.relation != DominanceRelation::Dominates)
    throw ContractError("utility_dominance_check: precondition requires dominates_analytic(a, b) = Dominates");
  if (trials < 2 || utilities < 1)
    throw ConfigError("utility_dominance_check: need trials >= 2 and utilities >= 1");
  if (input.style.size() != a.style_dims())
    throw ConfigError("utility_dominance_check: input style dimensions do not match the models");

  const std::size_t dims = a.style_dims();

  // Generate random monotone step utilities with corners spread over the
  // pooled quantile range of both models.
  RngStream urng = rng.child("utilities");
  std::vector<MonotoneStepUtility> us(utilities);
  for (std::size_t ui = 0; ui < utilities; ++ui) {
    MonotoneStepUtility& u = us[ui];
    RngStream one = urng.child(ui);
    std::size_t steps = 1 + one.next_u64() % 8;
    u.thresholds.resize(steps, std::vector<double>(dims));
    u.weights.resize(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      for (std::size_t d = 0; d < dims; ++d) {
        double q = one.next_open_unit();
        double lo = a.style_marginals()[d].quantile(q);
        double hi = b.is_null() ? lo : b.style_marginals()[d].quantile(q);
        u.thresholds[k][d] = std::min(lo, hi) + one.next_unit() * (std::abs(hi - lo) + 1e-9);
      }
      u.weights[k] = one.next_open_unit();
    }
  }

  // Coupled draws: one uniform per (trial, dimension) feeds both quantile maps.
  RngStream drng = rng.child("draws");
  std::vector<double> style_a(dims), style_b(dims);
  UtilityDominanceReport report;
  report.trials = trials;
  report.gaps.resize(utilities);
  std::vector<std::vector<double>> diff(utilities, std::vector<double>(trials));
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream one = drng.child(t);
    for (std::size_t d = 0; d < dims; ++d) {
      double q = one.next_open_unit();
      style_a[d] = a.style_marginals()[d].quantile(q);
      if (!b.is_null()) style_b[d] = b.style_marginals()[d].quantile(q);
    }
    for (std::size_t k = 0; k < utilities; ++k) {
      double va = us[k](style_a);
      double vb = b.is_null() ? 0.0 : us[k](style_b);  // the null model scores at the utility floor
      diff[k][t] = va - vb;
    }
  }
  for (std::size_t k = 0; k < utilities; ++k) {
    double m = stats::mean(diff[k]);
    double se = std::sqrt(stats::variance(diff[k]) / static_cast<double>(trials));
    report.gaps[k] = UtilityGap{m, se};
    if (m < -3.0 * se) {
      report.pass = false;
      ++report.violations;
    }
  }
  return report;
}

}  // namespace hiresim
