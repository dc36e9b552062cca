#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "hiresim/metrics.hpp"

using namespace hiresim;

namespace {

PlayRecord record(std::size_t index, double considered, double tau) {
  PlayRecord rec;
  rec.candidate_index = index;
  rec.submitted_score = considered;
  rec.considered_score = considered;
  rec.decision = considered >= tau ? 1 : 0;
  return rec;
}

}  // namespace

TEST_CASE("perfect classification yields the trivial rates") {
  std::vector<Candidate> candidates = {
      {FeatureVector{{}, {7.0}}, Group::P, 1},
      {FeatureVector{{}, {8.0}}, Group::U, 1},
      {FeatureVector{{}, {1.0}}, Group::P, 0},
      {FeatureVector{{}, {2.0}}, Group::U, 0},
  };
  std::vector<PlayRecord> records;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    records.push_back(record(i, candidates[i].features.style[0], 5.0));
  auto m = evaluate(records, candidates);
  REQUIRE(m.tpr == 1.0);
  REQUIRE(m.fpr == 0.0);
  REQUIRE(m.accuracy == 1.0);
  REQUIRE(m.tpr_disparity == 0.0);
  REQUIRE(m.group_rates_defined);
}

TEST_CASE("six-record fixture matches hand counts") {
  // P: positives scoring 7 (accept) and 4 (reject) -> TPR_P = 1/2.
  // U: positives scoring 6 (accept), 3 and 2 (reject) -> TPR_U = 1/3.
  // One U negative scoring 9 (accept) -> FPR = 1.
  std::vector<Candidate> candidates = {
      {FeatureVector{{}, {7.0}}, Group::P, 1}, {FeatureVector{{}, {4.0}}, Group::P, 1},
      {FeatureVector{{}, {6.0}}, Group::U, 1}, {FeatureVector{{}, {3.0}}, Group::U, 1},
      {FeatureVector{{}, {2.0}}, Group::U, 1}, {FeatureVector{{}, {9.0}}, Group::U, 0},
  };
  std::vector<PlayRecord> records;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    records.push_back(record(i, candidates[i].features.style[0], 5.0));
  auto m = evaluate(records, candidates);
  REQUIRE(m.tpr_p == Catch::Approx(0.5));
  REQUIRE(m.tpr_u == Catch::Approx(1.0 / 3.0));
  REQUIRE(m.tpr == Catch::Approx(0.4));  // 2 of 5 positives
  REQUIRE(m.fpr == 1.0);
  REQUIRE(m.accuracy == Catch::Approx(2.0 / 6.0));
  REQUIRE(m.tpr_disparity == Catch::Approx(0.5 - 1.0 / 3.0));
}

TEST_CASE("pooled tpr is the group mixture with empirical weights") {
  RngStream rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    RngStream sub = rng.child(trial);
    std::vector<Candidate> candidates;
    std::vector<PlayRecord> records;
    std::size_t n = 20 + sub.next_u64() % 100;
    for (std::size_t i = 0; i < n; ++i) {
      Candidate c{FeatureVector{{}, {sub.next_unit() * 10.0}},
                  sub.next_bernoulli(0.5) ? Group::P : Group::U, sub.next_bernoulli(0.5) ? 1 : 0};
      candidates.push_back(c);
      records.push_back(record(i, c.features.style[0], 5.0));
    }
    auto m = evaluate(records, candidates);
    double pos_p = 0, pos_u = 0;
    for (const auto& c : candidates) {
      pos_p += c.label == 1 && c.group == Group::P;
      pos_u += c.label == 1 && c.group == Group::U;
    }
    if (pos_p + pos_u == 0) continue;
    double pooled = (pos_p * m.tpr_p + pos_u * m.tpr_u) / (pos_p + pos_u);
    REQUIRE(m.tpr == Catch::Approx(pooled).epsilon(1e-12));
  }
}

TEST_CASE("undefined group rates are flagged, not errored") {
  std::vector<Candidate> candidates = {{FeatureVector{{}, {7.0}}, Group::P, 1},
                                       {FeatureVector{{}, {1.0}}, Group::P, 0}};
  std::vector<PlayRecord> records = {record(0, 7.0, 5.0), record(1, 1.0, 5.0)};
  auto m = evaluate(records, candidates);
  REQUIRE_FALSE(m.group_rates_defined);  // no U positives
  REQUIRE_THROWS_AS(evaluate({}, candidates), DiagnosticError);
}

namespace {

SchemeSpec disparity_spec(double q_p_below, double q_u_below, double tau) {
  // Style U(0,1) scored by identity plus fundamental 5; choose uniform
  // supports so P(score < tau) equals the requested q values.
  SchemeSpec spec;
  spec.kind = SchemeKind::Traditional;
  spec.threshold = tau;
  double cut = tau - 5.0;  // style cutoff
  // P(U(lo, lo+1) < cut) = cut - lo for cut inside the support.
  spec.candidate_models = {
      ManipulationModel::parametric({ScalarDistribution::uniform(cut - q_p_below, cut - q_p_below + 1.0)}),
      ManipulationModel::parametric({ScalarDistribution::uniform(cut - q_u_below, cut - q_u_below + 1.0)})};
  return spec;
}

}  // namespace

TEST_CASE("resume outcome disparity via the product formula") {
  const Scorer scorer = Scorer::linear({1.0, 1.0}, 0.0);

  // Accepted originals have zero disparity.
  auto spec = disparity_spec(0.2, 0.6, 5.3);
  FeatureVector passing{{6.0}, {0.0}};
  REQUIRE(resume_outcome_disparity(passing, spec, scorer) == 0.0);

  // Equal models give exactly zero.
  SchemeSpec symmetric = spec;
  symmetric.candidate_models.unprivileged = symmetric.candidate_models.privileged;
  FeatureVector failing{{5.0}, {0.0}};
  REQUIRE(resume_outcome_disparity(failing, symmetric, scorer) == 0.0);

  // q_P = 0.2, q_U = 0.6 under a null hirer: delta = 0.8 - 0.4 = 0.4.
  double analytic = resume_outcome_disparity(failing, spec, scorer);
  REQUIRE(analytic == Catch::Approx(0.4).epsilon(1e-12));

  // Monte Carlo agrees within 4 sigma at 20000 replications per group.
  double mc = resume_outcome_disparity(failing, spec, scorer, DisparityMode::MonteCarlo, 20000,
                                       RngStream(7));
  double sigma = std::sqrt(0.8 * 0.2 / 20000.0 + 0.6 * 0.4 / 20000.0);
  REQUIRE(mc == Catch::Approx(analytic).margin(4.0 * sigma));
}

TEST_CASE("bootstrap confidence intervals") {
  RngStream stream(5);

  // Constant metric: half-width exactly zero.
  auto constant = bootstrap_ci(
      [](std::size_t, RngStream) {
        return std::optional<std::map<std::string, double>>{{{"m", 1.25}}};
      },
      50, 0.95, stream);
  REQUIRE(constant.metrics.at("m").mean == 1.25);
  REQUIRE(constant.metrics.at("m").half_width == 0.0);
  REQUIRE(constant.splits_used == 50);

  // Degenerate splits are skipped and counted.
  auto with_skips = bootstrap_ci(
      [](std::size_t i, RngStream) -> std::optional<std::map<std::string, double>> {
        if (i % 5 == 0) return std::nullopt;
        return std::map<std::string, double>{{"m", static_cast<double>(i)}};
      },
      50, 0.95, stream);
  REQUIRE(with_skips.splits_skipped == 10);
  REQUIRE(with_skips.splits_used == 40);

  // splits = 1 is a configuration error.
  REQUIRE_THROWS_AS(bootstrap_ci([](std::size_t, RngStream) {
                      return std::optional<std::map<std::string, double>>{};
                    },
                    1, 0.95, stream),
                    ConfigError);

  // The half-width follows z * sd / sqrt(n) for a known sample.
  auto spread = bootstrap_ci(
      [](std::size_t i, RngStream) {
        return std::optional<std::map<std::string, double>>{
            {{"m", i % 2 == 0 ? 1.0 : -1.0}}};
      },
      100, 0.95, stream);
  double sd = std::sqrt(100.0 / 99.0);  // sample sd of +-1 alternating
  double expected_hw = 1.959963984540054 * sd / 10.0;
  REQUIRE(spread.metrics.at("m").half_width == Catch::Approx(expected_hw).epsilon(1e-9));
}

TEST_CASE("geometric decay fit recovers an exact rate") {
  std::vector<std::pair<int, double>> sequence;
  for (int n = 1; n <= 10; ++n) sequence.emplace_back(n, 0.8 * std::pow(0.5, n));
  auto fit = fit_geometric_decay(sequence);
  REQUIRE(fit.rate == Catch::Approx(0.5).epsilon(1e-9));
  REQUIRE(fit.r_squared == Catch::Approx(1.0).epsilon(1e-9));
  REQUIRE_FALSE(fit.already_converged);

  auto converged = fit_geometric_decay({{1, 0.0}, {2, 0.0}, {3, 0.0}});
  REQUIRE(converged.already_converged);

  REQUIRE_THROWS_AS(fit_geometric_decay({{1, 0.5}, {2, 0.25}}), DiagnosticError);
}
