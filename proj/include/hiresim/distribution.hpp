#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "hiresim/errors.hpp"
#include "hiresim/rng.hpp"
#include "hiresim/stats.hpp"

namespace hiresim {

/// One scalar distribution from the catalog. A shift of a catalog member is
/// itself a catalog member, so `shifted()` collapses to the base family and
/// every instance stays analytically comparable.
class ScalarDistribution {
 public:
  enum class Kind { PointMass, Uniform, Gaussian };

  static ScalarDistribution point_mass(double value) {
    ScalarDistribution d;
    d.kind_ = Kind::PointMass;
    d.a_ = value;
    return d;
  }

  static ScalarDistribution uniform(double lo, double hi) {
    if (!(lo < hi)) throw ConfigError("uniform distribution requires lo < hi");
    ScalarDistribution d;
    d.kind_ = Kind::Uniform;
    d.a_ = lo;
    d.b_ = hi;
    return d;
  }

  static ScalarDistribution gaussian(double mean, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian distribution requires sigma > 0");
    ScalarDistribution d;
    d.kind_ = Kind::Gaussian;
    d.a_ = mean;
    d.b_ = sigma;
    return d;
  }

  static ScalarDistribution shifted(const ScalarDistribution& base, double delta) {
    switch (base.kind_) {
      case Kind::PointMass:
        return point_mass(base.a_ + delta);
      case Kind::Uniform:
        return uniform(base.a_ + delta, base.b_ + delta);
      case Kind::Gaussian:
        return gaussian(base.a_ + delta, base.b_);
    }
    throw ConfigError("shifted: unknown base kind");
  }

  Kind kind() const { return kind_; }
  bool is_degenerate() const { return kind_ == Kind::PointMass; }

  /// First parameter: value (point mass), lo (uniform), mean (gaussian).
  double param_a() const { return a_; }
  /// Second parameter: hi (uniform), sigma (gaussian); unused for point mass.
  double param_b() const { return b_; }

  double mean() const {
    switch (kind_) {
      case Kind::PointMass: return a_;
      case Kind::Uniform: return 0.5 * (a_ + b_);
      case Kind::Gaussian: return a_;
    }
    return 0.0;
  }

  double support_min() const {
    switch (kind_) {
      case Kind::PointMass: return a_;
      case Kind::Uniform: return a_;
      case Kind::Gaussian: return -std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  double support_max() const {
    switch (kind_) {
      case Kind::PointMass: return a_;
      case Kind::Uniform: return b_;
      case Kind::Gaussian: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  double cdf(double x) const {
    switch (kind_) {
      case Kind::PointMass:
        return x >= a_ ? 1.0 : 0.0;
      case Kind::Uniform:
        if (x <= a_) return 0.0;
        if (x >= b_) return 1.0;
        return (x - a_) / (b_ - a_);
      case Kind::Gaussian:
        return stats::normal_cdf((x - a_) / b_);
    }
    return 0.0;
  }

  /// Generalized inverse CDF. For u1 <= u2, quantile(u1) <= quantile(u2),
  /// which is what the monotone-coupling construction relies on.
  double quantile(double u) const {
    switch (kind_) {
      case Kind::PointMass:
        return a_;
      case Kind::Uniform:
        return a_ + u * (b_ - a_);
      case Kind::Gaussian:
        return a_ + b_ * stats::normal_quantile(std::clamp(u, 0x1.0p-53, 1.0 - 0x1.0p-53));
    }
    return 0.0;
  }

  double sample(RngStream& rng) const { return quantile(rng.next_open_unit()); }

  bool operator==(const ScalarDistribution& other) const {
    if (kind_ != other.kind_) return false;
    if (kind_ == Kind::PointMass) return a_ == other.a_;
    return a_ == other.a_ && b_ == other.b_;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::PointMass: return "pointmass(" + std::to_string(a_) + ")";
      case Kind::Uniform: return "uniform(" + std::to_string(a_) + "," + std::to_string(b_) + ")";
      case Kind::Gaussian: return "gaussian(" + std::to_string(a_) + "," + std::to_string(b_) + ")";
    }
    return "?";
  }

 private:
  ScalarDistribution() = default;
  Kind kind_ = Kind::PointMass;
  double a_ = 0.0;
  double b_ = 0.0;
};

enum class ScalarOrder { Dominates, DominatedBy, Equivalent, Incomparable };

struct ScalarOrderResult {
  ScalarOrder order;
  /// For Incomparable: a point where the CDF ordering visibly fails, chosen
  /// so the two CDFs differ in double precision.
  std::optional<double> witness;
};

namespace detail {

inline double pick_witness(const ScalarDistribution& a, const ScalarDistribution& b,
                           std::initializer_list<double> candidates) {
  double best = *candidates.begin();
  double best_gap = -1.0;
  for (double x : candidates) {
    double gap = std::abs(a.cdf(x) - b.cdf(x));
    if (gap > best_gap) {
      best_gap = gap;
      best = x;
    }
  }
  return best;
}

}  // namespace detail

/// Exact first-order stochastic dominance comparison within the catalog.
/// `a` dominates `b` iff F_a(x) <= F_b(x) for all x.
inline ScalarOrderResult compare_fosd(const ScalarDistribution& a, const ScalarDistribution& b) {
  using Kind = ScalarDistribution::Kind;
  if (a == b) return {ScalarOrder::Equivalent, std::nullopt};

  const Kind ka = a.kind(), kb = b.kind();

  if (ka == Kind::PointMass && kb == Kind::PointMass) {
    return a.param_a() > b.param_a() ? ScalarOrderResult{ScalarOrder::Dominates, std::nullopt}
                                     : ScalarOrderResult{ScalarOrder::DominatedBy, std::nullopt};
  }

  if (ka == Kind::Uniform && kb == Kind::Uniform) {
    const bool ge = a.param_a() >= b.param_a() && a.param_b() >= b.param_b();
    const bool le = a.param_a() <= b.param_a() && a.param_b() <= b.param_b();
    if (ge) return {ScalarOrder::Dominates, std::nullopt};
    if (le) return {ScalarOrder::DominatedBy, std::nullopt};
    // Endpoints straddle: CDFs cross inside the overlap. Witness where F_a > F_b:
    // either a starts lower (F_a positive at b's lo) or a ends lower (F_a
    // saturates at a's hi while F_b has not).
    double w = a.param_a() < b.param_a() ? b.param_a() : a.param_b();
    return {ScalarOrder::Incomparable, w};
  }

  if (ka == Kind::Gaussian && kb == Kind::Gaussian) {
    const double mu1 = a.param_a(), s1 = a.param_b();
    const double mu2 = b.param_a(), s2 = b.param_b();
    if (s1 == s2) {
      return mu1 > mu2 ? ScalarOrderResult{ScalarOrder::Dominates, std::nullopt}
                       : ScalarOrderResult{ScalarOrder::DominatedBy, std::nullopt};
    }
    // Unequal sigmas: the CDFs cross exactly once, at the solution of
    // (x - mu1)/s1 = (x - mu2)/s2. Offsetting by the larger sigma lands on
    // the side where the narrower distribution's CDF is higher. Near-equal
    // sigmas push the crossing far into a tail, so fall back to points where
    // the gap is representable.
    double cross = (mu1 * s2 - mu2 * s1) / (s2 - s1);
    double preferred = s1 < s2 ? cross + std::max(s1, s2) : cross - std::max(s1, s2);
    if (std::abs(a.cdf(preferred) - b.cdf(preferred)) > 1e-12)
      return {ScalarOrder::Incomparable, preferred};
    double w = detail::pick_witness(
        a, b, {mu1, mu2, 0.5 * (mu1 + mu2), mu1 + s1, mu1 - s1, mu2 + s2, mu2 - s2});
    return {ScalarOrder::Incomparable, w};
  }

  if (ka == Kind::PointMass && kb == Kind::Uniform) {
    if (a.param_a() >= b.param_b()) return {ScalarOrder::Dominates, std::nullopt};
    if (a.param_a() <= b.param_a()) return {ScalarOrder::DominatedBy, std::nullopt};
    return {ScalarOrder::Incomparable, a.param_a()};
  }
  if (ka == Kind::Uniform && kb == Kind::PointMass) {
    auto flipped = compare_fosd(b, a);
    if (flipped.order == ScalarOrder::Dominates) return {ScalarOrder::DominatedBy, std::nullopt};
    if (flipped.order == ScalarOrder::DominatedBy) return {ScalarOrder::Dominates, std::nullopt};
    // F_uniform exceeds F_pointmass in (uniform lo, point mass location).
    return {ScalarOrder::Incomparable, 0.5 * (a.param_a() + b.param_a())};
  }

  // A Gaussian has unbounded support on both sides, so it neither dominates
  // nor is dominated by any bounded-support catalog member. The ordering
  // fails below the bounded support (the Gaussian has mass there) and at the
  // bounded support's top (the Gaussian still has mass above); report
  // whichever gap is representable.
  if (ka == Kind::Gaussian) {
    double w = detail::pick_witness(a, b, {b.support_min() - 1.0, b.support_max(), a.mean()});
    return {ScalarOrder::Incomparable, w};
  }
  double w = detail::pick_witness(a, b, {b.mean(), a.support_max(), a.support_min() - 1.0});
  return {ScalarOrder::Incomparable, w};
}

}  // namespace hiresim
