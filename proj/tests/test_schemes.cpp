#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hiresim/schemes.hpp"

using namespace hiresim;

namespace {

const Scorer kIdentity = Scorer::linear({1.0, 1.0}, 0.0);  // fundamental + style

Candidate candidate_at(double fundamental, double style = 0.0, Group g = Group::P, int label = 1) {
  return Candidate{FeatureVector{{fundamental}, {style}}, g, label};
}

ManipulationModel style_point(double value) {
  return ManipulationModel::parametric({ScalarDistribution::point_mass(value)});
}

ManipulationModel style_uniform(double lo, double hi) {
  return ManipulationModel::parametric({ScalarDistribution::uniform(lo, hi)});
}

}  // namespace

TEST_CASE("best response takes the higher scoring version") {
  RngStream rng(1);
  // Original score 5, manipulation lands on 4: keep the original.
  auto worse = style_point(-1.0);
  auto r1 = best_response(candidate_at(5.0), worse, kIdentity, rng);
  REQUIRE(r1.score == 5.0);
  REQUIRE_FALSE(r1.used_manipulation);

  // Original 5, manipulation 7: submit the manipulation.
  auto better = style_point(2.0);
  auto r2 = best_response(candidate_at(5.0), better, kIdentity, rng);
  REQUIRE(r2.score == 7.0);
  REQUIRE(r2.used_manipulation);

  // Null model always loses the argmax.
  auto r3 = best_response(candidate_at(5.0), ManipulationModel::null_model(), kIdentity, rng);
  REQUIRE(r3.score == 5.0);
  REQUIRE(r3.submitted == candidate_at(5.0).features);

  // Ties go to the original.
  auto tie = style_point(0.0);
  auto r4 = best_response(candidate_at(5.0), tie, kIdentity, rng);
  REQUIRE_FALSE(r4.used_manipulation);
}

TEST_CASE("traditional play equals threshold classification of the submission") {
  SchemeSpec spec;
  spec.kind = SchemeKind::Traditional;
  spec.candidate_models = {style_point(1.0), ManipulationModel::null_model()};
  spec.threshold = 6.0;

  std::vector<Candidate> candidates;
  for (int i = 0; i < 200; ++i)
    candidates.push_back(candidate_at(i * 0.05, 0.0, i % 2 ? Group::P : Group::U, i % 3 == 0));
  auto records = play(spec, candidates, kIdentity, RngStream(3));
  REQUIRE(records.size() == candidates.size());
  for (const auto& rec : records) {
    REQUIRE(rec.considered_score == rec.submitted_score);
    REQUIRE(rec.decision == (rec.submitted_score >= 6.0 ? 1 : 0));
  }
}

TEST_CASE("two-ticket play accepts via the hirer draw") {
  // Submitted score 4 below tau 6, deterministic hirer draw scores 6: accept.
  SchemeSpec spec;
  spec.kind = SchemeKind::TwoTicket;
  spec.candidate_models = {ManipulationModel::null_model(), ManipulationModel::null_model()};
  spec.hirer_model = style_point(2.0);
  spec.threshold = 6.0;
  auto records = play(spec, {candidate_at(4.0)}, kIdentity, RngStream(5));
  REQUIRE(records[0].submitted_score == 4.0);
  REQUIRE(records[0].considered_score == 6.0);  // closed boundary
  REQUIRE(records[0].decision == 1);
}

TEST_CASE("n-ticket considered score is the max over draws") {
  // Hand case: submitted 4, three hirer draws {5, 5.5, 5.9}, tau 6: reject.
  SchemeSpec spec;
  spec.kind = SchemeKind::NTicket;
  spec.n = 3;
  spec.candidate_models = {ManipulationModel::null_model(), ManipulationModel::null_model()};
  spec.hirer_model = style_uniform(0.9, 2.0);
  spec.threshold = 6.0;

  // Find a stream whose three draws stay below 2.0 in style and check the max rule directly.
  auto records = play(spec, {candidate_at(4.0)}, kIdentity, RngStream(8));
  const auto& rec = records[0];
  REQUIRE(rec.considered_score >= rec.submitted_score);
  REQUIRE(rec.decision == (rec.considered_score >= 6.0 ? 1 : 0));
  REQUIRE(rec.draws_used == 3);

  RealizedPlay hand;
  hand.original_score = 4.0;
  hand.hirer_draw_scores = {5.0, 5.5, 5.9};
  REQUIRE(hand.considered_score() == 5.9);
  REQUIRE(to_record(hand, 6.0).decision == 0);
  hand.hirer_draw_scores.push_back(6.0);
  REQUIRE(to_record(hand, 6.0).decision == 1);
}

TEST_CASE("scheme validation enforces the null-hirer biconditional") {
  SchemeSpec traditional_with_hirer;
  traditional_with_hirer.kind = SchemeKind::Traditional;
  traditional_with_hirer.hirer_model = style_point(0.0);
  traditional_with_hirer.threshold = 0.0;
  REQUIRE_THROWS_AS(traditional_with_hirer.validate(), ConfigError);

  SchemeSpec ticket_without_hirer;
  ticket_without_hirer.kind = SchemeKind::TwoTicket;
  ticket_without_hirer.threshold = 0.0;
  REQUIRE_THROWS_AS(ticket_without_hirer.validate(), ConfigError);

  SchemeSpec bad_n;
  bad_n.kind = SchemeKind::NTicket;
  bad_n.n = 0;
  bad_n.hirer_model = style_point(0.0);
  bad_n.threshold = 0.0;
  REQUIRE_THROWS_AS(bad_n.validate(), ConfigError);
}

TEST_CASE("ticket monotonicity under coupled streams") {
  // With the same stream, n+1 tickets re-realize the same first n draws plus
  // one more, so the decision can only improve.
  std::vector<Candidate> candidates;
  RngStream gen(33);
  for (int i = 0; i < 500; ++i) candidates.push_back(candidate_at(gen.next_unit() * 6.0));

  for (int n = 1; n < 6; ++n) {
    SchemeSpec smaller;
    smaller.kind = SchemeKind::NTicket;
    smaller.n = n;
    smaller.candidate_models = {style_uniform(0.0, 1.0), ManipulationModel::null_model()};
    smaller.hirer_model = style_uniform(0.0, 1.5);
    smaller.threshold = 6.0;
    SchemeSpec larger = smaller;
    larger.n = n + 1;

    auto rec_small = play(smaller, candidates, kIdentity, RngStream(77));
    auto rec_large = play(larger, candidates, kIdentity, RngStream(77));
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      REQUIRE(rec_large[i].decision >= rec_small[i].decision);
      REQUIRE(rec_large[i].considered_score >= rec_small[i].considered_score);
    }
  }
}

TEST_CASE("acceptance probability monte carlo matches trivial cases") {
  SchemeSpec spec;
  spec.kind = SchemeKind::Traditional;
  spec.candidate_models = {ManipulationModel::null_model(), ManipulationModel::null_model()};
  spec.threshold = 6.0;

  // Original already passes: probability exactly 1 for any replication count.
  auto hit = acceptance_probability_mc(spec, candidate_at(7.0), kIdentity, 100, RngStream(1));
  REQUIRE(hit.p_hat == 1.0);
  REQUIRE(hit.std_error == 0.0);

  // No manipulation, original below tau: exactly 0.
  auto miss = acceptance_probability_mc(spec, candidate_at(5.0), kIdentity, 100, RngStream(1));
  REQUIRE(miss.p_hat == 0.0);
}

TEST_CASE("acceptance probability against the bernoulli oracle") {
  // Candidate pass probability 0.7 via the product formula with a null hirer:
  // style U(0,1), tau at the 0.3 quantile of the manipulated score.
  SchemeSpec spec;
  spec.kind = SchemeKind::Traditional;
  spec.candidate_models = {style_uniform(0.0, 1.0), style_uniform(0.0, 1.0)};
  spec.threshold = 5.3;  // fundamental 5 + style draw >= 5.3 iff draw >= 0.3

  auto est = acceptance_probability_mc(spec, candidate_at(5.0), kIdentity, 100000, RngStream(12));
  REQUIRE(est.p_hat == Catch::Approx(0.7).margin(4.0 * est.std_error));
}

TEST_CASE("analytic acceptance probability implements the product formula") {
  // q_g = 0.3, q_H = 0.5, s(x) < tau, two-ticket: 1 - 0.3 * 0.5 = 0.85.
  SchemeSpec spec;
  spec.kind = SchemeKind::TwoTicket;
  spec.candidate_models = {style_uniform(0.0, 1.0), style_uniform(0.0, 1.0)};
  spec.threshold = 5.3;                         // s(x) = 5 below tau; q_g = P(U(0,1) < 0.3) = 0.3
  spec.hirer_model = style_uniform(-0.7, 1.3);  // q_H = P(U(-0.7,1.3) < 0.3) = 0.5

  auto result = acceptance_probability_analytic(spec, candidate_at(5.0), kIdentity);
  REQUIRE(result.exact);
  REQUIRE(result.value == Catch::Approx(1.0 - 0.3 * 0.5).epsilon(1e-12));

  // Original passes: probability one regardless of the models.
  auto sure = acceptance_probability_analytic(spec, candidate_at(6.0), kIdentity);
  REQUIRE(sure.value == 1.0);

  // NTicket(3) with baseline z = 0 and h = 0.5: 1 - 0.5^3 = 0.875.
  SchemeSpec nt;
  nt.kind = SchemeKind::NTicket;
  nt.n = 3;
  nt.candidate_models = {ManipulationModel::null_model(), ManipulationModel::null_model()};
  nt.hirer_model = style_uniform(-0.7, 1.3);
  nt.threshold = 5.3;
  auto three = acceptance_probability_analytic(nt, candidate_at(5.0), kIdentity);
  REQUIRE(three.value == Catch::Approx(1.0 - 0.125).epsilon(1e-12));
}

TEST_CASE("monte carlo and analytic acceptance agree across random configurations") {
  RngStream rng(31337);
  for (int trial = 0; trial < 200; ++trial) {
    RngStream sub = rng.child(trial);
    auto random_style = [&](RngStream& r) {
      switch (r.next_u64() % 3) {
        case 0: return ScalarDistribution::point_mass(r.next_unit() * 2.0);
        case 1: {
          double lo = r.next_unit();
          return ScalarDistribution::uniform(lo, lo + 0.5 + r.next_unit());
        }
        default: return ScalarDistribution::gaussian(r.next_unit() * 2.0, 0.3 + r.next_unit());
      }
    };
    SchemeSpec spec;
    int pick = static_cast<int>(sub.next_u64() % 3);
    spec.kind = pick == 0 ? SchemeKind::Traditional : pick == 1 ? SchemeKind::TwoTicket
                                                                : SchemeKind::NTicket;
    spec.n = 1 + static_cast<int>(sub.next_u64() % 3);
    spec.candidate_models = {ManipulationModel::parametric({random_style(sub)}),
                             ManipulationModel::parametric({random_style(sub)})};
    if (spec.kind != SchemeKind::Traditional)
      spec.hirer_model = ManipulationModel::parametric({random_style(sub)});
    Candidate c = candidate_at(sub.next_unit() * 2.0, 0.0, sub.next_u64() % 2 ? Group::P : Group::U);
    spec.threshold = 1.0 + sub.next_unit() * 2.5;

    auto analytic = acceptance_probability_analytic(spec, c, kIdentity);
    REQUIRE(analytic.exact);
    const std::size_t replications = 10000;
    auto mc = acceptance_probability_mc(spec, c, kIdentity, replications, sub.child("mc"));
    double sigma = std::sqrt(std::max(analytic.value * (1.0 - analytic.value),
                                      mc.p_hat * (1.0 - mc.p_hat)) /
                             static_cast<double>(replications));
    REQUIRE(std::abs(mc.p_hat - analytic.value) <=
            4.0 * sigma + 3.0 / static_cast<double>(replications));
  }
}

TEST_CASE("n-ticket dynamics expose the contraction") {
  // h = 0.5, baseline 0: trajectory 0.5, 0.75, 0.875, ...
  auto dyn = nticket_dynamics(candidate_at(5.0), ManipulationModel::null_model(),
                              style_uniform(-0.7, 1.3), kIdentity, 5.3);
  REQUIRE(dyn.hirer_pass_prob == Catch::Approx(0.5).epsilon(1e-12));
  REQUIRE(dyn.baseline_raw == 0.0);
  REQUIRE(dyn.outcome_limit == 1);
  REQUIRE(dyn.trajectory(1) == Catch::Approx(0.5).epsilon(1e-12));
  REQUIRE(dyn.trajectory(2) == Catch::Approx(0.75).epsilon(1e-12));
  REQUIRE(dyn.trajectory(3) == Catch::Approx(0.875).epsilon(1e-12));

  // h = 0 and the original fails: limit 0, trajectory constant.
  auto stuck = nticket_dynamics(candidate_at(5.0), ManipulationModel::null_model(),
                                style_point(-1.0), kIdentity, 6.0);
  REQUIRE(stuck.hirer_pass_prob == 0.0);
  REQUIRE(stuck.outcome_limit == 0);
  REQUIRE(stuck.trajectory(50) == 0.0);

  // h = 0 but the original passes: limit 1 via the best-response baseline.
  auto already = nticket_dynamics(candidate_at(7.0), ManipulationModel::null_model(),
                                  style_point(-1.0), kIdentity, 6.0);
  REQUIRE(already.outcome_limit == 1);
  REQUIRE(already.baseline_best_response == 1.0);

  // h = 1 reaches the limit in one step exactly.
  auto instant = nticket_dynamics(candidate_at(5.0), ManipulationModel::null_model(),
                                  style_point(2.0), kIdentity, 6.0);
  REQUIRE(instant.hirer_pass_prob == 1.0);
  REQUIRE(instant.trajectory(1) == 1.0);
}

TEST_CASE("iterated dynamics match the closed form") {
  // |T^n(z) - closed form| <= 1e-12 for n <= 60 over an (h, z) grid.
  for (double h : {0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0}) {
    for (double z : {0.0, 0.1, 0.5, 0.9, 1.0}) {
      NTicketDynamics dyn;
      dyn.hirer_pass_prob = h;
      dyn.contraction_rate = 1.0 - h;
      for (int n = 0; n <= 60; ++n) {
        REQUIRE(std::abs(dyn.iterate(z, n) - dyn.closed_form(z, n)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("group gap decays geometrically and respects the banach bound") {
  NTicketDynamics dyn;
  dyn.hirer_pass_prob = 0.3;
  dyn.contraction_rate = 0.7;
  double zp = 0.6, zu = 0.2;
  for (int n = 0; n <= 40; ++n) {
    double gap = dyn.closed_form(zp, n) - dyn.closed_form(zu, n);
    REQUIRE(gap == Catch::Approx(std::pow(0.7, n) * 0.4).epsilon(1e-9));
    REQUIRE(1.0 - dyn.closed_form(zu, n) <= dyn.bound(zu, n) + 1e-12);
  }
}
