#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hiresim/distribution.hpp"
#include "hiresim/errors.hpp"
#include "hiresim/rng.hpp"
#include "hiresim/stats.hpp"

namespace hiresim {

enum class Group : unsigned char { P, U };

inline const char* to_string(Group g) { return g == Group::P ? "P" : "U"; }

/// Resume features: a preserved fundamental block and a style block that
/// manipulations overwrite.
struct FeatureVector {
  std::vector<double> fundamental;
  std::vector<double> style;

  std::size_t dims() const { return fundamental.size() + style.size(); }

  double at(std::size_t i) const {
    return i < fundamental.size() ? fundamental[i] : style[i - fundamental.size()];
  }

  bool operator==(const FeatureVector&) const = default;
};

struct Candidate {
  FeatureVector features;
  Group group = Group::P;
  int label = 0;  // 1 = qualified
};

/// Label rule: probability of being qualified, a function of features only.
/// The signature is the independence guarantee: no group argument exists.
using LabelRule = std::function<double(const FeatureVector&)>;

struct PopulationSpec {
  std::size_t fundamental_dims = 0;
  std::size_t style_dims = 0;
  std::vector<ScalarDistribution> fundamental_law;  // one marginal per dimension
  std::vector<ScalarDistribution> style_law;
  /// Optional joint sampler; overrides the per-dimension marginals.
  std::function<FeatureVector(RngStream&)> joint_sampler;
  LabelRule label_rule;
  double prob_privileged = 0.5;  // P(G = P)

  void validate() const {
    if (fundamental_dims + style_dims < 1)
      throw ConfigError("population: needs at least one feature dimension");
    if (!joint_sampler) {
      if (fundamental_law.size() != fundamental_dims)
        throw ConfigError("population: fundamental_law size does not match fundamental_dims");
      if (style_law.size() != style_dims)
        throw ConfigError("population: style_law size does not match style_dims");
    }
    if (!(prob_privileged > 0.0 && prob_privileged < 1.0))
      throw ConfigError("population: both groups must have positive probability");
    if (!label_rule) throw ConfigError("population: label_rule missing");
  }
};

/// Draws `count` candidates. Each candidate uses its own child stream, so the
/// result is independent of evaluation order and worker count.
inline std::vector<Candidate> sample_population(const PopulationSpec& spec, std::size_t count,
                                                const RngStream& stream) {
  spec.validate();
  if (count < 1) throw ConfigError("sample_population: count must be >= 1");

  std::vector<Candidate> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream sub = stream.child(i);
    Candidate& c = out[i];
    if (spec.joint_sampler) {
      c.features = spec.joint_sampler(sub);
      if (c.features.fundamental.size() != spec.fundamental_dims ||
          c.features.style.size() != spec.style_dims)
        throw ConfigError("sample_population: joint sampler returned wrong dimensions");
    } else {
      c.features.fundamental.reserve(spec.fundamental_dims);
      c.features.style.reserve(spec.style_dims);
      for (const auto& law : spec.fundamental_law) c.features.fundamental.push_back(law.sample(sub));
      for (const auto& law : spec.style_law) c.features.style.push_back(law.sample(sub));
    }
    c.group = sub.next_bernoulli(spec.prob_privileged) ? Group::P : Group::U;
    double p1 = spec.label_rule(c.features);
    if (!(p1 >= 0.0 && p1 <= 1.0)) throw ConfigError("label_rule returned a value outside [0, 1]");
    c.label = sub.next_bernoulli(p1) ? 1 : 0;
  }
  return out;
}

struct ChiSquareCell {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Diagnostics for the modeling assumptions X independent of G and
/// Y independent of G given X, computed on binned features.
struct IndependenceReport {
  std::vector<ChiSquareCell> feature_group;          // per feature dimension
  std::vector<ChiSquareCell> label_group_given_bin;  // per feature dimension, pooled over bins
  double alpha = 0.0;
  bool pass = true;
  double min_p_value = 1.0;
};

namespace detail {

inline std::vector<double> quantile_bin_edges(std::vector<double> values, std::size_t bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> edges;
  for (std::size_t k = 1; k < bins; ++k) {
    double q = values[(k * values.size()) / bins];
    if (edges.empty() || q > edges.back()) edges.push_back(q);
  }
  return edges;  // may be shorter than bins-1 when values repeat
}

inline std::size_t bin_of(const std::vector<double>& edges, double x) {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
}

inline ChiSquareCell chi_square_from_table(const std::vector<std::vector<double>>& obs) {
  // Drops all-zero rows/columns before computing expectations.
  std::size_t rows = obs.size(), cols = obs.empty() ? 0 : obs[0].size();
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      row_sum[r] += obs[r][c];
      col_sum[c] += obs[r][c];
      total += obs[r][c];
    }
  std::size_t eff_rows = 0, eff_cols = 0;
  for (double s : row_sum) eff_rows += s > 0.0;
  for (double s : col_sum) eff_cols += s > 0.0;
  ChiSquareCell cell;
  if (eff_rows < 2 || eff_cols < 2 || total <= 0.0) return cell;  // nothing to test
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (row_sum[r] <= 0.0 || col_sum[c] <= 0.0) continue;
      double expected = row_sum[r] * col_sum[c] / total;
      double diff = obs[r][c] - expected;
      cell.statistic += diff * diff / expected;
    }
  cell.dof = static_cast<double>((eff_rows - 1) * (eff_cols - 1));
  cell.p_value = stats::chi_square_sf(cell.statistic, cell.dof);
  return cell;
}

}  // namespace detail

inline IndependenceReport chi_square_independence_check(const std::vector<Candidate>& candidates,
                                                        std::size_t bins, double alpha = 0.001) {
  if (candidates.empty()) throw DiagnosticError("independence check: empty candidate list");
  if (bins < 2) throw ConfigError("independence check: bins must be >= 2");
  bool has_p = false, has_u = false;
  for (const auto& c : candidates) (c.group == Group::P ? has_p : has_u) = true;
  if (!has_p || !has_u) throw DiagnosticError("independence check: both groups must be present");

  const std::size_t dims = candidates.front().features.dims();
  IndependenceReport report;
  report.alpha = alpha;

  for (std::size_t d = 0; d < dims; ++d) {
    std::vector<double> values(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) values[i] = candidates[i].features.at(d);
    auto edges = detail::quantile_bin_edges(values, bins);
    std::size_t nbins = edges.size() + 1;

    // X vs G: bins x 2 contingency table.
    std::vector<std::vector<double>> table(nbins, std::vector<double>(2, 0.0));
    for (std::size_t i = 0; i < candidates.size(); ++i)
      table[detail::bin_of(edges, values[i])][candidates[i].group == Group::P ? 0 : 1] += 1.0;
    report.feature_group.push_back(detail::chi_square_from_table(table));

    // Y vs G within each bin of this dimension, statistics pooled over bins.
    ChiSquareCell pooled;
    for (std::size_t b = 0; b < nbins; ++b) {
      std::vector<std::vector<double>> gl(2, std::vector<double>(2, 0.0));
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (detail::bin_of(edges, values[i]) != b) continue;
        gl[candidates[i].group == Group::P ? 0 : 1][candidates[i].label] += 1.0;
      }
      auto cell = detail::chi_square_from_table(gl);
      pooled.statistic += cell.statistic;
      pooled.dof += cell.dof;
    }
    pooled.p_value = pooled.dof > 0.0 ? stats::chi_square_sf(pooled.statistic, pooled.dof) : 1.0;
    report.label_group_given_bin.push_back(pooled);
  }

  for (const auto& cell : report.feature_group) report.min_p_value = std::min(report.min_p_value, cell.p_value);
  for (const auto& cell : report.label_group_given_bin)
    report.min_p_value = std::min(report.min_p_value, cell.p_value);
  report.pass = report.min_p_value >= alpha;
  return report;
}

}  // namespace hiresim
