#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "hiresim/config.hpp"

using namespace hiresim;

namespace {

json valid_config() {
  return json::parse(R"({
    "seed": 7,
    "population": {
      "count": 1000,
      "fundamental": [{"kind": "uniform", "low": 0, "high": 10}],
      "style": [{"kind": "point_mass", "value": 0}],
      "group_fraction_privileged": 0.5,
      "label_rule": {
        "kind": "score_threshold",
        "scorer": {"kind": "linear", "weights": [1, 0], "offset": 0},
        "cutoff": 5.0
      }
    },
    "scorer": {"kind": "linear", "weights": [1, 1], "offset": 0},
    "models": {
      "privileged": {"kind": "parametric", "style": [{"kind": "point_mass", "value": 1}]},
      "unprivileged": {"kind": "null"},
      "hirer": {"kind": "parametric", "style": [{"kind": "point_mass", "value": 1}]}
    },
    "schemes": [{"kind": "traditional"}, {"kind": "two_ticket"}],
    "threshold": {"mode": "learn", "epsilon": 1e-9, "target_fpr": 0.0},
    "evaluation": {"train_fraction": 0.7, "splits": 10, "confidence": 0.95, "replications": 1000},
    "output": {"directory": "out", "format": "both"}
  })");
}

}  // namespace

TEST_CASE("a valid config parses into domain objects") {
  auto config = parse_experiment_config(valid_config());
  REQUIRE(config.seed == 7);
  REQUIRE(config.population_count == 1000);
  REQUIRE(config.population.fundamental_dims == 1);
  REQUIRE(config.population.style_dims == 1);
  REQUIRE(config.scorer.dims() == 2);
  REQUIRE(config.model_unprivileged.is_null());
  REQUIRE_FALSE(config.model_privileged.is_null());
  REQUIRE(config.schemes.size() == 2);
  REQUIRE(config.train_fraction == 0.7);
  REQUIRE(config.threshold_mode == ThresholdMode::Learn);

  // Label rule wired through the reference scorer.
  REQUIRE(config.population.label_rule(FeatureVector{{6.0}, {0.0}}) == 1.0);
  REQUIRE(config.population.label_rule(FeatureVector{{4.0}, {0.0}}) == 0.0);
}

TEST_CASE("unknown keys are errors with field paths") {
  auto bad = valid_config();
  bad["population"]["typo_key"] = 1;
  REQUIRE_THROWS_WITH(parse_experiment_config(bad),
                      Catch::Matchers::ContainsSubstring("config.population.typo_key"));

  auto bad_top = valid_config();
  bad_top["extra"] = true;
  REQUIRE_THROWS_WITH(parse_experiment_config(bad_top),
                      Catch::Matchers::ContainsSubstring("config.extra"));
}

TEST_CASE("multiple validation failures are enumerated together") {
  auto bad = valid_config();
  bad.erase("seed");
  bad["evaluation"]["train_fraction"] = 1.5;
  try {
    parse_experiment_config(bad);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    std::string message = e.what();
    REQUIRE(message.find("config.seed") != std::string::npos);
    REQUIRE(message.find("config.evaluation.train_fraction") != std::string::npos);
  }
}

TEST_CASE("dimension mismatches are cross-checked") {
  auto bad = valid_config();
  bad["scorer"]["weights"] = {1, 1, 1};
  REQUIRE_THROWS_WITH(parse_experiment_config(bad),
                      Catch::Matchers::ContainsSubstring("config.scorer.weights"));

  auto bad_model = valid_config();
  bad_model["models"]["privileged"]["style"].push_back({{"kind", "point_mass"}, {"value", 2}});
  REQUIRE_THROWS_WITH(parse_experiment_config(bad_model),
                      Catch::Matchers::ContainsSubstring("config.models.privileged"));
}

TEST_CASE("n_ticket ranges expand into one scheme per n") {
  auto cfg = valid_config();
  cfg["schemes"] = json::array({json{{"kind", "n_ticket"}, {"n_range", {1, 5}}}});
  auto config = parse_experiment_config(cfg);
  REQUIRE(config.schemes.size() == 5);
  for (int n = 1; n <= 5; ++n) {
    REQUIRE(config.schemes[n - 1].kind == SchemeKind::NTicket);
    REQUIRE(config.schemes[n - 1].n == n);
  }
}

TEST_CASE("ticket schemes demand a non-null hirer model") {
  auto bad = valid_config();
  bad["models"]["hirer"] = {{"kind", "null"}};
  REQUIRE_THROWS_WITH(parse_experiment_config(bad),
                      Catch::Matchers::ContainsSubstring("config.models.hirer"));

  // Traditional-only runs are fine without one.
  bad["schemes"] = json::array({json{{"kind", "traditional"}}});
  REQUIRE_NOTHROW(parse_experiment_config(bad));
}

TEST_CASE("fixed threshold mode carries its value") {
  auto cfg = valid_config();
  cfg["threshold"] = {{"mode", "fixed"}, {"value", 5.25}, {"epsilon", 1e-9}};
  auto config = parse_experiment_config(cfg);
  REQUIRE(config.threshold_mode == ThresholdMode::Fixed);
  REQUIRE(config.fixed_threshold == 5.25);
}

TEST_CASE("shifted distributions and logistic label rules parse") {
  auto cfg = valid_config();
  cfg["population"]["style"] = json::array(
      {json{{"kind", "shifted"}, {"base", {{"kind", "uniform"}, {"low", 0}, {"high", 1}}}, {"delta", 2.0}}});
  cfg["models"]["privileged"]["style"] = json::array({json{{"kind", "gaussian"}, {"mean", 1}, {"sigma", 2}}});
  cfg["population"]["label_rule"] = {
      {"kind", "logistic"},
      {"scorer", {{"kind", "linear"}, {"weights", {1, 0}}, {"offset", 0}}},
      {"center", 5.0},
      {"scale", 1.0}};
  auto config = parse_experiment_config(cfg);
  REQUIRE(config.population.style_law[0].kind() == ScalarDistribution::Kind::Uniform);
  REQUIRE(config.population.style_law[0].param_a() == 2.0);
  double p = config.population.label_rule(FeatureVector{{5.0}, {0.0}});
  REQUIRE(p == Catch::Approx(0.5));

  // Invalid JSON text surfaces as a ConfigError too.
  REQUIRE_THROWS_AS(load_experiment_config("{ not json"), ConfigError);
}

TEST_CASE("config digest is stable and key-order independent") {
  auto a = valid_config();
  auto config_a = parse_experiment_config(a);
  std::string digest_a = config_digest(config_a.canonical);
  REQUIRE(digest_a.size() == 16);

  // nlohmann::json objects are key-sorted, so semantically equal configs
  // written in different orders share a digest.
  auto b = json::parse(a.dump());
  REQUIRE(config_digest(b) == digest_a);

  auto c = valid_config();
  c["seed"] = 8;
  REQUIRE(config_digest(c) != digest_a);
}
