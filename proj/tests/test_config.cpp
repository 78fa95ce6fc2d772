#include "doctest.h"

#include <fstream>

#include "json.hpp"

#include "helpers.hpp"
#include "recfair/config.hpp"
#include "recfair/errors.hpp"
#include "recfair/synthetic.hpp"

using namespace recfair;
using recfair::testing::TempDir;

namespace {

std::string write_config(const TempDir& tmp, const std::string& name, const std::string& body) {
  std::ofstream out(tmp.str(name), std::ios::binary);
  out << body;
  return tmp.str(name);
}

}  // namespace

TEST_CASE("an empty config document keeps every default") {
  TempDir tmp;
  const RunConfig c = load_run_config(write_config(tmp, "empty.json", "{}"));
  CHECK(c.seed == 42);
  CHECK(c.split_ratio == 0.8);
  CHECK(c.k == 10);
  CHECK(c.buckets == 20);
  CHECK(c.alpha == 0.01);
  CHECK(!c.min_test_rating.has_value());
  CHECK(c.algorithms == std::vector<Algorithm>{Algorithm::UserKnn, Algorithm::ItemKnn,
                                               Algorithm::SvdPlusPlus, Algorithm::ListRankMf});
  CHECK(c.audit_factors ==
        std::vector<Factor>{Factor::Anomaly, Factor::Entropy, Factor::Size});
  CHECK(c.grid == HyperParamGrid{});
  CHECK(c.hyperparams.empty());
  CHECK(c.grid_threads == 1);
  CHECK(c.out_dir.empty());
  CHECK(c.data.ml1m_dir.empty());
  CHECK(c.data.canonical_dir.empty());
  CHECK_NOTHROW(validate_run_config(c, false, false));
}

TEST_CASE("a fully specified config parses field by field") {
  TempDir tmp;
  const std::string body = R"({
    "data": {"canonical_dir": "/some/dir"},
    "seed": 7,
    "split_ratio": 0.6,
    "k": 5,
    "buckets": 4,
    "alpha": 0.05,
    "min_test_rating": 4,
    "algorithms": ["itemknn", "listrankmf"],
    "audit_factors": ["entropy"],
    "grid": {"neighbors": [5, 10], "factors": [8], "learning_rate": [0.01], "l2": [0.1],
             "epochs": [10]},
    "hyperparams": {"itemknn": {"neighbors": 25, "shrinkage": 2.5}},
    "grid_threads": 3,
    "out_dir": "/tmp/run"
  })";
  const RunConfig c = load_run_config(write_config(tmp, "full.json", body));
  CHECK(c.data.canonical_dir == "/some/dir");
  CHECK(c.seed == 7);
  CHECK(c.split_ratio == 0.6);
  CHECK(c.k == 5);
  CHECK(c.buckets == 4);
  CHECK(c.alpha == 0.05);
  REQUIRE(c.min_test_rating.has_value());
  CHECK(*c.min_test_rating == 4.0);
  CHECK(c.algorithms == std::vector<Algorithm>{Algorithm::ItemKnn, Algorithm::ListRankMf});
  CHECK(c.audit_factors == std::vector<Factor>{Factor::Entropy});
  CHECK(c.grid.neighbors == std::vector<int>{5, 10});
  CHECK(c.grid.factors == std::vector<int>{8});
  CHECK(c.grid.shrinkage == HyperParamGrid{}.shrinkage);  // unset lists keep defaults
  REQUIRE(c.hyperparams.count(Algorithm::ItemKnn) == 1);
  CHECK(c.hyperparams.at(Algorithm::ItemKnn).neighbors == 25);
  CHECK(c.hyperparams.at(Algorithm::ItemKnn).shrinkage == 2.5);
  CHECK(c.hyperparams.at(Algorithm::ItemKnn).factors == HyperParams{}.factors);
  CHECK(c.grid_threads == 3);
  CHECK(c.out_dir == "/tmp/run");
}

TEST_CASE("config parsing rejects structural problems") {
  TempDir tmp;
  CHECK_THROWS_AS(load_run_config(tmp.str("missing.json")), ConfigError);
  CHECK_THROWS_AS(load_run_config(write_config(tmp, "broken.json", "{ nope")), ConfigError);
  CHECK_THROWS_AS(load_run_config(write_config(tmp, "array.json", "[1,2]")), ConfigError);
  CHECK_THROWS_AS(load_run_config(write_config(tmp, "unknown.json", R"({"sed": 7})")),
                  ConfigError);
  CHECK_THROWS_AS(
      load_run_config(write_config(tmp, "nested.json", R"({"data": {"dir": "x"}})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(write_config(tmp, "wrongtype.json", R"({"seed": "forty-two"})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(write_config(tmp, "badalgo.json", R"({"algorithms": ["svd"]})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(write_config(tmp, "badfactor.json", R"({"audit_factors": ["sized"]})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(write_config(tmp, "badgrid.json", R"({"grid": {"neighbor": [5]}})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(
          write_config(tmp, "badhp.json", R"({"hyperparams": {"svd": {"factors": 8}}})")),
      ConfigError);
  CHECK_THROWS_AS(
      load_run_config(
          write_config(tmp, "badhpkey.json", R"({"hyperparams": {"svdpp": {"factor": 8}}})")),
      ConfigError);
}

TEST_CASE("validation checks every numeric range") {
  RunConfig c;
  auto expect_reject = [](RunConfig cfg) {
    CHECK_THROWS_AS(validate_run_config(cfg, false, false), ConfigError);
  };

  RunConfig bad = c;
  bad.split_ratio = 0.0;
  expect_reject(bad);
  bad = c;
  bad.split_ratio = 1.5;
  expect_reject(bad);
  bad = c;
  bad.k = 0;
  expect_reject(bad);
  bad = c;
  bad.buckets = 1;
  expect_reject(bad);
  bad = c;
  bad.alpha = 0.0;
  expect_reject(bad);
  bad = c;
  bad.alpha = 1.0;
  expect_reject(bad);
  bad = c;
  bad.grid_threads = 0;
  expect_reject(bad);
  bad = c;
  bad.algorithms.clear();
  expect_reject(bad);
  bad = c;
  bad.algorithms = {Algorithm::UserKnn, Algorithm::UserKnn};
  expect_reject(bad);
  bad = c;
  bad.audit_factors.clear();
  expect_reject(bad);
  bad = c;
  bad.audit_factors = {Factor::Size, Factor::Size};
  expect_reject(bad);
  bad = c;
  bad.hyperparams[Algorithm::UserKnn] = HyperParams{};
  bad.hyperparams[Algorithm::UserKnn].neighbors = 0;
  expect_reject(bad);
  bad = c;
  bad.grid.epochs.clear();  // needed by the default algorithm list
  expect_reject(bad);

  // A broken grid is fine when fixed hyperparameters cover the algorithms.
  bad.algorithms = {Algorithm::UserKnn};
  bad.hyperparams[Algorithm::UserKnn] = HyperParams{};
  CHECK_NOTHROW(validate_run_config(bad, false, false));
}

TEST_CASE("validation gates the data source and output directory") {
  TempDir tmp;
  RunConfig c;
  CHECK_NOTHROW(validate_run_config(c, false, false));

  CHECK_THROWS_AS(validate_run_config(c, true, false), ConfigError);  // no source

  c.data.ml1m_dir = tmp.str();
  c.data.canonical_dir = tmp.str();
  CHECK_THROWS_AS(validate_run_config(c, true, false), ConfigError);  // both sources

  c.data.ml1m_dir.clear();
  CHECK_NOTHROW(validate_run_config(c, true, false));

  c.data.canonical_dir = tmp.str("does-not-exist");
  CHECK_THROWS_AS(validate_run_config(c, true, false), ConfigError);

  c.data.canonical_dir = tmp.str();
  CHECK_THROWS_AS(validate_run_config(c, true, true), ConfigError);  // out_dir missing
  c.out_dir = tmp.str("out");
  CHECK_NOTHROW(validate_run_config(c, true, true));
}

TEST_CASE("the resolved config omits the output directory and round-trips") {
  RunConfig c;
  c.out_dir = "/should/not/appear";
  c.data.canonical_dir = "/data/canonical";
  c.hyperparams[Algorithm::UserKnn] = HyperParams{};

  const std::string text = resolved_config_json(c);
  CHECK(text.find("out_dir") == std::string::npos);
  CHECK(text.find("/should/not/appear") == std::string::npos);

  const auto j = nlohmann::json::parse(text);
  CHECK(j.at("seed").get<std::uint64_t>() == 42);
  CHECK(j.at("min_test_rating").is_null());
  CHECK(j.at("data").at("canonical_dir").get<std::string>() == "/data/canonical");
  CHECK(j.at("algorithms").size() == 4);
  CHECK(j.at("hyperparams").contains("userknn"));
  CHECK(!j.at("tool_version").get<std::string>().empty());

  c.min_test_rating = 4.0;
  const auto j2 = nlohmann::json::parse(resolved_config_json(c));
  CHECK(j2.at("min_test_rating").get<double>() == 4.0);
}

TEST_CASE("the configured dataset loads from either source layout") {
  TempDir tmp;
  SyntheticSpec spec;
  spec.num_users = 6;
  spec.num_items = 5;
  spec.seed = 2;
  const RatingDataset ds = generate_synthetic(spec);
  save_canonical(ds, tmp.str("canon"));

  RunConfig c;
  c.data.canonical_dir = tmp.str("canon");
  CHECK(load_config_dataset(c) == ds);

  RunConfig m;
  m.data.ml1m_dir = (recfair::testing::fixture_dir() / "ml1m_tiny").string();
  const RatingDataset ml = load_config_dataset(m);
  CHECK(ml.num_users() == 4);
  CHECK(ml.num_ratings() == 12);
}
