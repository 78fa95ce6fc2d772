#include "recfair/config.hpp"

#include <filesystem>
#include <fstream>

#include <fmt/format.h>

#include "json.hpp"
#include "recfair/errors.hpp"
#include "recfair/version.hpp"

namespace recfair {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError(fmt::format("unknown config key '{}' in {}", key, where));
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("config field '{}' has the wrong type", key));
  }
}

HyperParams parse_hyperparams(const json& obj, const std::string& where) {
  check_keys(obj, {"neighbors", "shrinkage", "factors", "learning_rate", "l2", "epochs"}, where);
  HyperParams hp;
  read_field(obj, "neighbors", hp.neighbors);
  read_field(obj, "shrinkage", hp.shrinkage);
  read_field(obj, "factors", hp.factors);
  read_field(obj, "learning_rate", hp.learning_rate);
  read_field(obj, "l2", hp.l2);
  read_field(obj, "epochs", hp.epochs);
  return hp;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: invalid JSON: {}", path, e.what()));
  }
  if (!j.is_object()) throw ConfigError(fmt::format("{}: config root must be an object", path));

  check_keys(j,
             {"data", "seed", "split_ratio", "k", "buckets", "alpha", "min_test_rating",
              "algorithms", "audit_factors", "grid", "hyperparams", "grid_threads", "out_dir"},
             "config root");

  RunConfig config;
  try {
    if (j.contains("data")) {
      check_keys(j["data"], {"ml1m_dir", "canonical_dir"}, "data");
      read_field(j["data"], "ml1m_dir", config.data.ml1m_dir);
      read_field(j["data"], "canonical_dir", config.data.canonical_dir);
    }
    read_field(j, "seed", config.seed);
    read_field(j, "split_ratio", config.split_ratio);
    read_field(j, "k", config.k);
    read_field(j, "buckets", config.buckets);
    read_field(j, "alpha", config.alpha);
    if (j.contains("min_test_rating") && !j["min_test_rating"].is_null())
      config.min_test_rating = j["min_test_rating"].get<double>();

    if (j.contains("algorithms")) {
      config.algorithms.clear();
      for (const auto& t : j["algorithms"]) {
        auto a = algorithm_from_tag(t.get<std::string>());
        if (!a) throw ConfigError(fmt::format("unknown algorithm tag '{}'", t.get<std::string>()));
        config.algorithms.push_back(*a);
      }
    }
    if (j.contains("audit_factors")) {
      config.audit_factors.clear();
      for (const auto& t : j["audit_factors"]) {
        auto f = factor_from_tag(t.get<std::string>());
        if (!f) throw ConfigError(fmt::format("unknown factor tag '{}'", t.get<std::string>()));
        config.audit_factors.push_back(*f);
      }
    }
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      check_keys(g, {"neighbors", "shrinkage", "factors", "learning_rate", "l2", "epochs"},
                 "grid");
      read_field(g, "neighbors", config.grid.neighbors);
      read_field(g, "shrinkage", config.grid.shrinkage);
      read_field(g, "factors", config.grid.factors);
      read_field(g, "learning_rate", config.grid.learning_rate);
      read_field(g, "l2", config.grid.l2);
      read_field(g, "epochs", config.grid.epochs);
    }
    if (j.contains("hyperparams")) {
      for (const auto& [tag, obj] : j["hyperparams"].items()) {
        auto a = algorithm_from_tag(tag);
        if (!a) throw ConfigError(fmt::format("unknown algorithm tag '{}' in hyperparams", tag));
        config.hyperparams[*a] = parse_hyperparams(obj, fmt::format("hyperparams.{}", tag));
      }
    }
    read_field(j, "grid_threads", config.grid_threads);
    read_field(j, "out_dir", config.out_dir);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: malformed config: {}", path, e.what()));
  }
  return config;
}

void validate_run_config(const RunConfig& config, bool need_data, bool need_out) {
  if (!(config.split_ratio > 0.0 && config.split_ratio <= 1.0))
    throw ConfigError(fmt::format("split_ratio {} outside (0, 1]", config.split_ratio));
  if (config.k < 1) throw ConfigError(fmt::format("k must be >= 1, got {}", config.k));
  if (config.buckets < 2)
    throw ConfigError(fmt::format("buckets must be >= 2, got {}", config.buckets));
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw ConfigError(fmt::format("alpha {} outside (0, 1)", config.alpha));
  if (config.grid_threads < 1)
    throw ConfigError(fmt::format("grid_threads must be >= 1, got {}", config.grid_threads));
  if (config.algorithms.empty()) throw ConfigError("algorithms list is empty");
  for (std::size_t i = 0; i < config.algorithms.size(); ++i)
    for (std::size_t l = i + 1; l < config.algorithms.size(); ++l)
      if (config.algorithms[i] == config.algorithms[l])
        throw ConfigError(fmt::format("duplicate algorithm '{}'",
                                      algorithm_tag(config.algorithms[i])));
  if (config.audit_factors.empty()) throw ConfigError("audit_factors list is empty");
  for (std::size_t i = 0; i < config.audit_factors.size(); ++i)
    for (std::size_t l = i + 1; l < config.audit_factors.size(); ++l)
      if (config.audit_factors[i] == config.audit_factors[l])
        throw ConfigError(
            fmt::format("duplicate audit factor '{}'", factor_tag(config.audit_factors[i])));
  for (const auto& [algo, hp] : config.hyperparams) validate_hyperparams(algo, hp);
  for (Algorithm a : config.algorithms)
    if (!config.hyperparams.contains(a)) expand_grid(a, config.grid);  // grid must be usable

  if (need_data) {
    const bool has_ml1m = !config.data.ml1m_dir.empty();
    const bool has_canonical = !config.data.canonical_dir.empty();
    if (has_ml1m == has_canonical)
      throw ConfigError("config must set exactly one of data.ml1m_dir or data.canonical_dir");
    const std::string& dir = has_ml1m ? config.data.ml1m_dir : config.data.canonical_dir;
    if (!fs::is_directory(dir))
      throw ConfigError(fmt::format("data directory {} does not exist", dir));
  }
  if (need_out && config.out_dir.empty()) throw ConfigError("out_dir is required");
}

RatingDataset load_config_dataset(const RunConfig& config) {
  if (!config.data.ml1m_dir.empty()) {
    const fs::path dir(config.data.ml1m_dir);
    return load_ml1m((dir / "ratings.dat").string(), (dir / "users.dat").string(),
                     (dir / "movies.dat").string());
  }
  return load_canonical(config.data.canonical_dir);
}

std::string resolved_config_json(const RunConfig& config) {
  json j;
  j["tool_version"] = kToolVersion;
  json data = json::object();
  if (!config.data.ml1m_dir.empty()) data["ml1m_dir"] = config.data.ml1m_dir;
  if (!config.data.canonical_dir.empty()) data["canonical_dir"] = config.data.canonical_dir;
  j["data"] = data;
  j["seed"] = config.seed;
  j["split_ratio"] = config.split_ratio;
  j["k"] = config.k;
  j["buckets"] = config.buckets;
  j["alpha"] = config.alpha;
  if (config.min_test_rating)
    j["min_test_rating"] = *config.min_test_rating;
  else
    j["min_test_rating"] = nullptr;
  j["algorithms"] = json::array();
  for (Algorithm a : config.algorithms) j["algorithms"].push_back(algorithm_tag(a));
  j["audit_factors"] = json::array();
  for (Factor f : config.audit_factors) j["audit_factors"].push_back(factor_tag(f));
  j["grid"] = {{"neighbors", config.grid.neighbors},       {"shrinkage", config.grid.shrinkage},
               {"factors", config.grid.factors},           {"learning_rate", config.grid.learning_rate},
               {"l2", config.grid.l2},                     {"epochs", config.grid.epochs}};
  json fixed = json::object();
  for (const auto& [algo, hp] : config.hyperparams)
    fixed[algorithm_tag(algo)] = {{"neighbors", hp.neighbors},
                                  {"shrinkage", hp.shrinkage},
                                  {"factors", hp.factors},
                                  {"learning_rate", hp.learning_rate},
                                  {"l2", hp.l2},
                                  {"epochs", hp.epochs}};
  j["hyperparams"] = fixed;
  j["grid_threads"] = config.grid_threads;
  return j.dump(2) + "\n";
}

}  // namespace recfair
