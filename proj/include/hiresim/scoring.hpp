#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "hiresim/core_model.hpp"
#include "hiresim/errors.hpp"
#include "hiresim/manipulation.hpp"

namespace hiresim {

/// Non-decreasing piecewise-linear link for one feature dimension.
/// Flat extrapolation beyond the first and last knots keeps it monotone and bounded.
struct PiecewiseLinearLink {
  std::vector<double> xs;
  std::vector<double> ys;

  void validate() const {
    if (xs.size() != ys.size() || xs.size() < 2)
      throw ConfigError("link: needs at least two knots with matching x/y lists");
    for (std::size_t i = 1; i < xs.size(); ++i) {
      if (!(xs[i] > xs[i - 1])) throw ConfigError("link: knot x values must be strictly increasing");
      if (ys[i] < ys[i - 1]) throw ConfigError("link: knot y values must be non-decreasing");
    }
  }

  double operator()(double x) const {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs.begin());
    double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
  }
};

/// Monotone non-decreasing resume scorer over the concatenated
/// [fundamental..., style...] feature blocks.
class Scorer {
 public:
  enum class Kind { LinearNonNegative, MonotoneTable };

  static Scorer linear(std::vector<double> weights, double offset) {
    return Scorer(Kind::LinearNonNegative, std::move(weights), offset, std::nullopt, {});
  }

  static Scorer linear_clipped(std::vector<double> weights, double offset, double lo, double hi) {
    if (!(lo < hi)) throw ConfigError("scorer: clip range requires lo < hi");
    return Scorer(Kind::LinearNonNegative, std::move(weights), offset, std::make_pair(lo, hi), {});
  }

  /// Per-dimension monotone links composed with a non-negative linear map.
  static Scorer monotone_table(std::vector<PiecewiseLinearLink> links, std::vector<double> weights,
                               double offset, std::optional<std::pair<double, double>> clip = {}) {
    if (links.size() != weights.size())
      throw ConfigError("scorer: one link per weight required");
    for (const auto& link : links) link.validate();
    Scorer s(Kind::MonotoneTable, std::move(weights), offset, clip, std::move(links));
    return s;
  }

  Kind kind() const { return kind_; }
  std::size_t dims() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  double offset() const { return offset_; }
  bool clipped() const { return clip_.has_value(); }
  std::pair<double, double> clip_range() const { return *clip_; }
  const std::vector<PiecewiseLinearLink>& links() const { return links_; }

  double score(const FeatureVector& input) const {
    if (input.dims() != weights_.size())
      throw ConfigError("scorer: input dimensions do not match weights");
    double acc = offset_;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      double v = input.at(i);
      if (kind_ == Kind::MonotoneTable) v = links_[i](v);
      acc += weights_[i] * v;
    }
    if (clip_) acc = std::clamp(acc, clip_->first, clip_->second);
    return acc;
  }

  /// NullOutput scores as minus infinity: the null manipulation never wins a max.
  double score(const std::optional<FeatureVector>& input) const {
    return input ? score(*input) : -std::numeric_limits<double>::infinity();
  }

 private:
  Scorer(Kind kind, std::vector<double> weights, double offset,
         std::optional<std::pair<double, double>> clip, std::vector<PiecewiseLinearLink> links)
      : kind_(kind), weights_(std::move(weights)), offset_(offset), clip_(clip), links_(std::move(links)) {
    if (weights_.empty()) throw ConfigError("scorer: needs at least one weight");
    for (double w : weights_)
      if (!(w >= 0.0)) throw ConfigError("scorer: negative weight would break monotonicity");
  }

  Kind kind_;
  std::vector<double> weights_;
  double offset_;
  std::optional<std::pair<double, double>> clip_;
  std::vector<PiecewiseLinearLink> links_;
};

/// Threshold classifier with the closed left boundary: accept iff score >= tau.
struct ThresholdClassifier {
  Scorer scorer;
  double tau;

  int classify(const FeatureVector& input) const { return scorer.score(input) >= tau ? 1 : 0; }
  int classify(const std::optional<FeatureVector>& input) const {
    return scorer.score(input) >= tau ? 1 : 0;
  }
};

enum class ScoreLawMethod { Exact, MonteCarlo };

/// P(s(L(x)) < tau) together with how it was obtained.
struct ScoreLaw {
  double prob_below = 0.0;
  ScoreLawMethod method = ScoreLawMethod::Exact;
  std::size_t samples = 0;   // MonteCarlo only
  double std_error = 0.0;    // MonteCarlo only
};

namespace detail {

// Fixed seed behind the zero-argument Monte Carlo fallback, so repeated
// calls with equal inputs agree bit for bit.
inline constexpr std::uint64_t kScoreLawSeed = 0x5c04e1a3b2d19c47ULL;

}  // namespace detail

inline ScoreLaw score_law(const Scorer& scorer, const ManipulationModel& model,
                          const FeatureVector& input, double tau, std::size_t mc_samples,
                          RngStream rng) {
  if (model.is_null()) return {1.0, ScoreLawMethod::Exact, 0, 0.0};
  if (input.style.size() != model.style_dims())
    throw ConfigError("score_law: input style dimensions do not match the model");

  // Exact path: unclipped linear scorer, independent marginals, at most one
  // non-degenerate weighted style term (an affine image has a closed-form CDF).
  if (scorer.kind() == Scorer::Kind::LinearNonNegative && !scorer.clipped() &&
      !model.has_joint_sampler()) {
    const std::size_t d1 = input.fundamental.size();
    double base = scorer.offset();
    for (std::size_t i = 0; i < d1; ++i) base += scorer.weights()[i] * input.fundamental[i];

    std::optional<std::pair<double, ScalarDistribution>> live;  // (weight, marginal)
    bool exact_capable = true;
    for (std::size_t j = 0; j < model.style_dims(); ++j) {
      double w = scorer.weights()[d1 + j];
      const ScalarDistribution& marginal = model.style_marginals()[j];
      if (marginal.is_degenerate() || w == 0.0) {
        base += w * marginal.mean();  // deterministic contribution
        continue;
      }
      if (live) {
        exact_capable = false;  // two independent non-degenerate terms: no catalog law
        break;
      }
      live = {w, marginal};
    }
    if (exact_capable) {
      double p;
      if (!live) {
        p = base < tau ? 1.0 : 0.0;
      } else {
        auto [w, marginal] = *live;
        if (marginal.kind() == ScalarDistribution::Kind::Uniform) {
          double lo = base + w * marginal.param_a();
          double hi = base + w * marginal.param_b();
          p = tau <= lo ? 0.0 : tau >= hi ? 1.0 : (tau - lo) / (hi - lo);
        } else {  // Gaussian
          p = stats::normal_cdf((tau - (base + w * marginal.param_a())) / (w * marginal.param_b()));
        }
      }
      return {p, ScoreLawMethod::Exact, 0, 0.0};
    }
  }

  // Monte Carlo fallback.
  if (mc_samples < 2) throw ConfigError("score_law: mc_samples must be >= 2");
  std::size_t below = 0;
  for (std::size_t i = 0; i < mc_samples; ++i) {
    RngStream sub = rng.child(i);
    auto drawn = model.apply(input, sub);
    if (scorer.score(drawn) < tau) ++below;
  }
  double p = static_cast<double>(below) / static_cast<double>(mc_samples);
  double se = std::sqrt(p * (1.0 - p) / static_cast<double>(mc_samples));
  return {p, ScoreLawMethod::MonteCarlo, mc_samples, se};
}

/// Deterministic default: an internal fixed stream backs the Monte Carlo path.
inline ScoreLaw score_law(const Scorer& scorer, const ManipulationModel& model,
                          const FeatureVector& input, double tau) {
  return score_law(scorer, model, input, tau, 100000, RngStream(detail::kScoreLawSeed));
}

}  // namespace hiresim
