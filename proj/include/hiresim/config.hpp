#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hiresim/core_model.hpp"
#include "hiresim/errors.hpp"
#include "hiresim/manipulation.hpp"
#include "hiresim/schemes.hpp"
#include "hiresim/scoring.hpp"

namespace hiresim {

using nlohmann::json;

namespace cfg {

/// Collects validation failures with their field paths so a bad config is
/// reported in one pass instead of one error at a time.
class Errors {
 public:
  void add(const std::string& path, const std::string& message) {
    messages_.push_back(path + ": " + message);
  }
  bool empty() const { return messages_.empty(); }
  void raise_if_any() const {
    if (messages_.empty()) return;
    std::string all = "config validation failed:";
    for (const auto& m : messages_) all += "\n  " + m;
    throw ConfigError(all);
  }

 private:
  std::vector<std::string> messages_;
};

inline void require_keys(const json& node, const std::string& path,
                         const std::set<std::string>& allowed, Errors& errors) {
  if (!node.is_object()) {
    errors.add(path, "expected an object");
    return;
  }
  for (auto it = node.begin(); it != node.end(); ++it) {
    if (!allowed.count(it.key())) errors.add(path + "." + it.key(), "unknown key");
  }
}

inline const json* get(const json& node, const std::string& key) {
  auto it = node.find(key);
  return it == node.end() ? nullptr : &*it;
}

inline double number_or(const json& node, const std::string& path, const std::string& key,
                        std::optional<double> fallback, Errors& errors) {
  const json* v = get(node, key);
  if (!v) {
    if (fallback) return *fallback;
    errors.add(path + "." + key, "required number missing");
    return 0.0;
  }
  if (!v->is_number()) {
    errors.add(path + "." + key, "expected a number");
    return fallback.value_or(0.0);
  }
  return v->get<double>();
}

}  // namespace cfg

struct DistributionConfig {
  ScalarDistribution dist = ScalarDistribution::point_mass(0.0);
};

inline ScalarDistribution parse_distribution(const json& node, const std::string& path,
                                             cfg::Errors& errors) {
  if (!node.is_object() || !node.contains("kind") || !node["kind"].is_string()) {
    errors.add(path, "distribution needs a string 'kind'");
    return ScalarDistribution::point_mass(0.0);
  }
  const std::string kind = node["kind"].get<std::string>();
  try {
    if (kind == "point_mass") {
      cfg::require_keys(node, path, {"kind", "value"}, errors);
      return ScalarDistribution::point_mass(cfg::number_or(node, path, "value", std::nullopt, errors));
    }
    if (kind == "uniform") {
      cfg::require_keys(node, path, {"kind", "low", "high"}, errors);
      return ScalarDistribution::uniform(cfg::number_or(node, path, "low", std::nullopt, errors),
                                         cfg::number_or(node, path, "high", std::nullopt, errors));
    }
    if (kind == "gaussian") {
      cfg::require_keys(node, path, {"kind", "mean", "sigma"}, errors);
      return ScalarDistribution::gaussian(cfg::number_or(node, path, "mean", std::nullopt, errors),
                                          cfg::number_or(node, path, "sigma", std::nullopt, errors));
    }
    if (kind == "shifted") {
      cfg::require_keys(node, path, {"kind", "base", "delta"}, errors);
      if (!node.contains("base")) {
        errors.add(path + ".base", "required distribution missing");
        return ScalarDistribution::point_mass(0.0);
      }
      auto base = parse_distribution(node["base"], path + ".base", errors);
      return ScalarDistribution::shifted(base, cfg::number_or(node, path, "delta", std::nullopt, errors));
    }
  } catch (const ConfigError& e) {
    errors.add(path, e.what());
    return ScalarDistribution::point_mass(0.0);
  }
  errors.add(path + ".kind", "unknown distribution kind '" + kind + "'");
  return ScalarDistribution::point_mass(0.0);
}

inline Scorer parse_scorer(const json& node, const std::string& path, cfg::Errors& errors) {
  Scorer fallback = Scorer::linear({1.0}, 0.0);
  if (!node.is_object() || !node.contains("kind") || !node["kind"].is_string()) {
    errors.add(path, "scorer needs a string 'kind'");
    return fallback;
  }
  const std::string kind = node["kind"].get<std::string>();
  auto read_weights = [&](std::vector<double>& weights) {
    const json* w = cfg::get(node, "weights");
    if (!w || !w->is_array() || w->empty()) {
      errors.add(path + ".weights", "required non-empty number array");
      weights = {1.0};
      return;
    }
    for (const auto& x : *w) {
      if (!x.is_number()) {
        errors.add(path + ".weights", "expected numbers");
        weights = {1.0};
        return;
      }
      weights.push_back(x.get<double>());
    }
  };
  auto read_clip = [&]() -> std::optional<std::pair<double, double>> {
    const json* c = cfg::get(node, "clip");
    if (!c) return std::nullopt;
    if (!c->is_array() || c->size() != 2 || !(*c)[0].is_number() || !(*c)[1].is_number()) {
      errors.add(path + ".clip", "expected [low, high]");
      return std::nullopt;
    }
    return std::make_pair((*c)[0].get<double>(), (*c)[1].get<double>());
  };
  try {
    if (kind == "linear") {
      cfg::require_keys(node, path, {"kind", "weights", "offset", "clip"}, errors);
      std::vector<double> weights;
      read_weights(weights);
      double offset = cfg::number_or(node, path, "offset", 0.0, errors);
      auto clip = read_clip();
      return clip ? Scorer::linear_clipped(std::move(weights), offset, clip->first, clip->second)
                  : Scorer::linear(std::move(weights), offset);
    }
    if (kind == "monotone_table") {
      cfg::require_keys(node, path, {"kind", "weights", "offset", "clip", "links"}, errors);
      std::vector<double> weights;
      read_weights(weights);
      double offset = cfg::number_or(node, path, "offset", 0.0, errors);
      std::vector<PiecewiseLinearLink> links;
      const json* l = cfg::get(node, "links");
      if (!l || !l->is_array()) {
        errors.add(path + ".links", "required array of {xs, ys}");
        return fallback;
      }
      for (std::size_t i = 0; i < l->size(); ++i) {
        const json& ln = (*l)[i];
        std::string lpath = path + ".links[" + std::to_string(i) + "]";
        cfg::require_keys(ln, lpath, {"xs", "ys"}, errors);
        PiecewiseLinearLink link;
        if (ln.contains("xs") && ln["xs"].is_array())
          for (const auto& x : ln["xs"]) link.xs.push_back(x.get<double>());
        if (ln.contains("ys") && ln["ys"].is_array())
          for (const auto& y : ln["ys"]) link.ys.push_back(y.get<double>());
        links.push_back(std::move(link));
      }
      return Scorer::monotone_table(std::move(links), std::move(weights), offset, read_clip());
    }
  } catch (const ConfigError& e) {
    errors.add(path, e.what());
    return fallback;
  }
  errors.add(path + ".kind", "unknown scorer kind '" + kind + "'");
  return fallback;
}

inline ManipulationModel parse_model(const json& node, const std::string& path, cfg::Errors& errors) {
  if (!node.is_object() || !node.contains("kind") || !node["kind"].is_string()) {
    errors.add(path, "manipulation model needs a string 'kind'");
    return ManipulationModel::null_model();
  }
  const std::string kind = node["kind"].get<std::string>();
  if (kind == "null") {
    cfg::require_keys(node, path, {"kind"}, errors);
    return ManipulationModel::null_model();
  }
  if (kind == "parametric") {
    cfg::require_keys(node, path, {"kind", "style"}, errors);
    const json* style = cfg::get(node, "style");
    if (!style || !style->is_array() || style->empty()) {
      errors.add(path + ".style", "required non-empty array of distributions");
      return ManipulationModel::null_model();
    }
    std::vector<ScalarDistribution> marginals;
    for (std::size_t i = 0; i < style->size(); ++i)
      marginals.push_back(parse_distribution((*style)[i], path + ".style[" + std::to_string(i) + "]", errors));
    return ManipulationModel::parametric(std::move(marginals));
  }
  errors.add(path + ".kind", "unknown model kind '" + kind + "'");
  return ManipulationModel::null_model();
}

inline LabelRule parse_label_rule(const json& node, const std::string& path, cfg::Errors& errors) {
  if (!node.is_object() || !node.contains("kind") || !node["kind"].is_string()) {
    errors.add(path, "label rule needs a string 'kind'");
    return [](const FeatureVector&) { return 0.5; };
  }
  const std::string kind = node["kind"].get<std::string>();
  if (kind == "constant") {
    cfg::require_keys(node, path, {"kind", "p"}, errors);
    double p = cfg::number_or(node, path, "p", std::nullopt, errors);
    if (p < 0.0 || p > 1.0) errors.add(path + ".p", "must lie in [0, 1]");
    return [p](const FeatureVector&) { return p; };
  }
  if (kind == "score_threshold" || kind == "logistic") {
    cfg::require_keys(node, path,
                      kind == "score_threshold"
                          ? std::set<std::string>{"kind", "scorer", "cutoff"}
                          : std::set<std::string>{"kind", "scorer", "center", "scale"},
                      errors);
    const json* s = cfg::get(node, "scorer");
    if (!s) {
      errors.add(path + ".scorer", "required scorer missing");
      return [](const FeatureVector&) { return 0.5; };
    }
    Scorer ref = parse_scorer(*s, path + ".scorer", errors);
    if (kind == "score_threshold") {
      double cutoff = cfg::number_or(node, path, "cutoff", std::nullopt, errors);
      return [ref, cutoff](const FeatureVector& x) { return ref.score(x) >= cutoff ? 1.0 : 0.0; };
    }
    double center = cfg::number_or(node, path, "center", std::nullopt, errors);
    double scale = cfg::number_or(node, path, "scale", std::nullopt, errors);
    if (!(scale > 0.0)) errors.add(path + ".scale", "must be > 0");
    return [ref, center, scale](const FeatureVector& x) {
      return 1.0 / (1.0 + std::exp(-(ref.score(x) - center) / scale));
    };
  }
  errors.add(path + ".kind", "unknown label rule kind '" + kind + "'");
  return [](const FeatureVector&) { return 0.5; };
}

struct SchemeConfig {
  SchemeKind kind = SchemeKind::Traditional;
  int n = 1;
};

enum class ThresholdMode { Learn, Fixed };
enum class OutputFormat { Json, Csv, Both };

struct ExperimentConfig {
  std::uint64_t seed = 0;

  std::size_t population_count = 0;
  PopulationSpec population;

  Scorer scorer = Scorer::linear({1.0}, 0.0);
  ManipulationModel model_privileged = ManipulationModel::null_model();
  ManipulationModel model_unprivileged = ManipulationModel::null_model();
  ManipulationModel model_hirer = ManipulationModel::null_model();

  std::vector<SchemeConfig> schemes;

  ThresholdMode threshold_mode = ThresholdMode::Learn;
  double epsilon = 1e-9;
  double target_fpr = 0.0;
  double fixed_threshold = 0.0;

  double train_fraction = 0.7;
  std::size_t splits = 2;
  double confidence = 0.95;
  std::size_t replications = 10000;
  bool classic_bootstrap = false;

  std::string output_directory = "out";
  OutputFormat output_format = OutputFormat::Both;
  bool dump_score_tables = false;

  json canonical;  // the parsed config, for digests and provenance
};

inline ExperimentConfig parse_experiment_config(const json& root) {
  cfg::Errors errors;
  ExperimentConfig config;
  config.canonical = root;

  cfg::require_keys(root, "config",
                    {"seed", "population", "scorer", "models", "schemes", "threshold", "evaluation",
                     "output"},
                    errors);
  if (!root.is_object()) {
    errors.raise_if_any();
    return config;
  }

  if (const json* seed = cfg::get(root, "seed"); seed && seed->is_number_unsigned())
    config.seed = seed->get<std::uint64_t>();
  else
    errors.add("config.seed", "required unsigned integer missing (every run must be reproducible)");

  // population
  if (const json* pop = cfg::get(root, "population"); pop) {
    const std::string path = "config.population";
    cfg::require_keys(*pop, path,
                      {"count", "fundamental", "style", "group_fraction_privileged", "label_rule"},
                      errors);
    double count = cfg::number_or(*pop, path, "count", std::nullopt, errors);
    if (count < 1) errors.add(path + ".count", "must be >= 1");
    config.population_count = static_cast<std::size_t>(count);
    auto read_laws = [&](const char* key, std::vector<ScalarDistribution>& out) {
      const json* arr = cfg::get(*pop, key);
      if (!arr) return;  // absent means zero dimensions
      if (!arr->is_array()) {
        errors.add(path + "." + key, "expected an array of distributions");
        return;
      }
      for (std::size_t i = 0; i < arr->size(); ++i)
        out.push_back(parse_distribution((*arr)[i], path + "." + key + "[" + std::to_string(i) + "]", errors));
    };
    read_laws("fundamental", config.population.fundamental_law);
    read_laws("style", config.population.style_law);
    config.population.fundamental_dims = config.population.fundamental_law.size();
    config.population.style_dims = config.population.style_law.size();
    config.population.prob_privileged =
        cfg::number_or(*pop, path, "group_fraction_privileged", 0.5, errors);
    if (const json* lr = cfg::get(*pop, "label_rule"); lr)
      config.population.label_rule = parse_label_rule(*lr, path + ".label_rule", errors);
    else
      errors.add(path + ".label_rule", "required label rule missing");
  } else {
    errors.add("config.population", "required section missing");
  }

  // scorer
  if (const json* s = cfg::get(root, "scorer"); s)
    config.scorer = parse_scorer(*s, "config.scorer", errors);
  else
    errors.add("config.scorer", "required section missing");

  // models
  if (const json* models = cfg::get(root, "models"); models) {
    cfg::require_keys(*models, "config.models", {"privileged", "unprivileged", "hirer"}, errors);
    if (const json* m = cfg::get(*models, "privileged"); m)
      config.model_privileged = parse_model(*m, "config.models.privileged", errors);
    else
      errors.add("config.models.privileged", "required model missing");
    if (const json* m = cfg::get(*models, "unprivileged"); m)
      config.model_unprivileged = parse_model(*m, "config.models.unprivileged", errors);
    else
      errors.add("config.models.unprivileged", "required model missing");
    if (const json* m = cfg::get(*models, "hirer"); m)
      config.model_hirer = parse_model(*m, "config.models.hirer", errors);
  } else {
    errors.add("config.models", "required section missing");
  }

  // schemes
  if (const json* schemes = cfg::get(root, "schemes"); schemes && schemes->is_array() && !schemes->empty()) {
    for (std::size_t i = 0; i < schemes->size(); ++i) {
      const json& node = (*schemes)[i];
      std::string path = "config.schemes[" + std::to_string(i) + "]";
      if (!node.is_object() || !node.contains("kind") || !node["kind"].is_string()) {
        errors.add(path, "scheme needs a string 'kind'");
        continue;
      }
      std::string kind = node["kind"].get<std::string>();
      if (kind == "traditional") {
        cfg::require_keys(node, path, {"kind"}, errors);
        config.schemes.push_back({SchemeKind::Traditional, 0});
      } else if (kind == "two_ticket") {
        cfg::require_keys(node, path, {"kind"}, errors);
        config.schemes.push_back({SchemeKind::TwoTicket, 1});
      } else if (kind == "n_ticket") {
        cfg::require_keys(node, path, {"kind", "n", "n_range"}, errors);
        if (const json* nr = cfg::get(node, "n_range"); nr) {
          if (!nr->is_array() || nr->size() != 2 || !(*nr)[0].is_number_integer() ||
              !(*nr)[1].is_number_integer()) {
            errors.add(path + ".n_range", "expected [low, high] integers");
            continue;
          }
          int lo = (*nr)[0].get<int>(), hi = (*nr)[1].get<int>();
          if (lo < 1 || hi < lo) {
            errors.add(path + ".n_range", "requires 1 <= low <= high");
            continue;
          }
          for (int n = lo; n <= hi; ++n) config.schemes.push_back({SchemeKind::NTicket, n});
        } else if (const json* n = cfg::get(node, "n"); n && n->is_number_integer()) {
          int v = n->get<int>();
          if (v < 1) errors.add(path + ".n", "must be >= 1");
          config.schemes.push_back({SchemeKind::NTicket, std::max(v, 1)});
        } else {
          errors.add(path, "n_ticket needs 'n' or 'n_range'");
        }
      } else {
        errors.add(path + ".kind", "unknown scheme kind '" + kind + "'");
      }
    }
  } else {
    errors.add("config.schemes", "required non-empty scheme list missing");
  }

  // threshold
  if (const json* th = cfg::get(root, "threshold"); th) {
    const std::string path = "config.threshold";
    cfg::require_keys(*th, path, {"mode", "epsilon", "target_fpr", "value"}, errors);
    std::string mode = "learn";
    if (const json* m = cfg::get(*th, "mode"); m && m->is_string()) mode = m->get<std::string>();
    if (mode == "learn") {
      config.threshold_mode = ThresholdMode::Learn;
    } else if (mode == "fixed") {
      config.threshold_mode = ThresholdMode::Fixed;
      config.fixed_threshold = cfg::number_or(*th, path, "value", std::nullopt, errors);
    } else {
      errors.add(path + ".mode", "must be 'learn' or 'fixed'");
    }
    config.epsilon = cfg::number_or(*th, path, "epsilon", 1e-9, errors);
    if (!(config.epsilon > 0.0)) errors.add(path + ".epsilon", "must be > 0");
    config.target_fpr = cfg::number_or(*th, path, "target_fpr", 0.0, errors);
    if (config.target_fpr < 0.0 || config.target_fpr >= 1.0)
      errors.add(path + ".target_fpr", "must lie in [0, 1)");
  }

  // evaluation
  if (const json* ev = cfg::get(root, "evaluation"); ev) {
    const std::string path = "config.evaluation";
    cfg::require_keys(*ev, path,
                      {"train_fraction", "splits", "confidence", "replications", "classic_bootstrap"},
                      errors);
    config.train_fraction = cfg::number_or(*ev, path, "train_fraction", 0.7, errors);
    if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
      errors.add(path + ".train_fraction", "must lie in (0, 1)");
    double splits = cfg::number_or(*ev, path, "splits", 2.0, errors);
    if (splits < 2) errors.add(path + ".splits", "must be >= 2");
    config.splits = static_cast<std::size_t>(splits);
    config.confidence = cfg::number_or(*ev, path, "confidence", 0.95, errors);
    if (!(config.confidence > 0.0 && config.confidence < 1.0))
      errors.add(path + ".confidence", "must lie in (0, 1)");
    double reps = cfg::number_or(*ev, path, "replications", 10000.0, errors);
    if (reps < 1) errors.add(path + ".replications", "must be >= 1");
    config.replications = static_cast<std::size_t>(reps);
    if (const json* cb = cfg::get(*ev, "classic_bootstrap"); cb) {
      if (cb->is_boolean()) config.classic_bootstrap = cb->get<bool>();
      else errors.add(path + ".classic_bootstrap", "expected a boolean");
    }
  } else {
    errors.add("config.evaluation", "required section missing");
  }

  // output
  if (const json* out = cfg::get(root, "output"); out) {
    const std::string path = "config.output";
    cfg::require_keys(*out, path, {"directory", "format", "dump_score_tables"}, errors);
    if (const json* dir = cfg::get(*out, "directory"); dir && dir->is_string())
      config.output_directory = dir->get<std::string>();
    if (const json* fmt = cfg::get(*out, "format"); fmt && fmt->is_string()) {
      std::string f = fmt->get<std::string>();
      if (f == "json") config.output_format = OutputFormat::Json;
      else if (f == "csv") config.output_format = OutputFormat::Csv;
      else if (f == "both") config.output_format = OutputFormat::Both;
      else errors.add(path + ".format", "must be json, csv or both");
    }
    if (const json* d = cfg::get(*out, "dump_score_tables"); d) {
      if (d->is_boolean()) config.dump_score_tables = d->get<bool>();
      else errors.add(path + ".dump_score_tables", "expected a boolean");
    }
  }

  // Cross-field checks that need the parsed pieces.
  if (errors.empty()) {
    try {
      config.population.validate();
    } catch (const ConfigError& e) {
      errors.add("config.population", e.what());
    }
    const std::size_t dims = config.population.fundamental_dims + config.population.style_dims;
    if (config.scorer.dims() != dims)
      errors.add("config.scorer.weights",
                 "length " + std::to_string(config.scorer.dims()) + " does not match the " +
                     std::to_string(dims) + " feature dimensions");
    auto check_model = [&](const ManipulationModel& m, const std::string& path) {
      if (!m.is_null() && m.style_dims() != config.population.style_dims)
        errors.add(path, "style dimensions do not match the population");
    };
    check_model(config.model_privileged, "config.models.privileged");
    check_model(config.model_unprivileged, "config.models.unprivileged");
    check_model(config.model_hirer, "config.models.hirer");
    bool needs_hirer = false;
    for (const auto& s : config.schemes)
      if (s.kind != SchemeKind::Traditional) needs_hirer = true;
    if (needs_hirer && config.model_hirer.is_null())
      errors.add("config.models.hirer",
                 "two_ticket / n_ticket schemes need a non-null hirer model (a null hirer is traditional hiring)");
  }

  errors.raise_if_any();
  return config;
}

inline ExperimentConfig load_experiment_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_experiment_config(root);
}

/// FNV-1a digest of the canonically serialized config; recorded in every
/// report so results can be traced back to their exact inputs.
inline std::string config_digest(const json& canonical) {
  std::string dump = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 0; i < 16; ++i) buf[15 - i] = hex[(h >> (4 * i)) & 0xF];
  buf[16] = '\0';
  return std::string(buf);
}

}  // namespace hiresim
