#include "doctest.h"

#include <stdexcept>

#include "helpers.hpp"
#include "recfair/errors.hpp"
#include "recfair/grid_search.hpp"
#include "recfair/split.hpp"
#include "recfair/synthetic.hpp"

using namespace recfair;

namespace {

SplitPair grid_data(std::uint64_t seed = 1) {
  SyntheticSpec spec;
  spec.num_users = 16;
  spec.num_items = 14;
  spec.min_profile = 5;
  spec.max_profile = 10;
  spec.seed = seed;
  return split_train_test(generate_synthetic(spec), 0.7, seed);
}

}  // namespace

TEST_CASE("grid expansion nests hyperparameters in a fixed order") {
  HyperParamGrid grid;
  grid.neighbors = {10, 30};
  grid.shrinkage = {0.0, 5.0, 9.0};
  grid.factors = {20, 50};
  grid.learning_rate = {0.01, 0.05};
  grid.l2 = {0.1};
  grid.epochs = {30, 100};

  const auto knn = expand_grid(Algorithm::UserKnn, grid);
  REQUIRE(knn.size() == 6);  // neighbors x shrinkage
  CHECK(knn[0].neighbors == 10);
  CHECK(knn[0].shrinkage == 0.0);
  CHECK(knn[1].shrinkage == 5.0);  // shrinkage varies fastest
  CHECK(knn[2].shrinkage == 9.0);
  CHECK(knn[3].neighbors == 30);
  // Irrelevant fields stay at their defaults.
  CHECK(knn[0].factors == HyperParams{}.factors);

  const auto mf = expand_grid(Algorithm::ListRankMf, grid);
  REQUIRE(mf.size() == 8);  // factors x learning_rate x l2 x epochs
  CHECK(mf[0].factors == 20);
  CHECK(mf[0].learning_rate == 0.01);
  CHECK(mf[0].epochs == 30);
  CHECK(mf[1].epochs == 100);  // epochs varies fastest
  CHECK(mf[2].learning_rate == 0.05);
  CHECK(mf[4].factors == 50);
  CHECK(mf[0].neighbors == HyperParams{}.neighbors);
}

TEST_CASE("the default grid matches the published sweep sizes") {
  const HyperParamGrid grid;
  CHECK(expand_grid(Algorithm::UserKnn, grid).size() == 4);
  CHECK(expand_grid(Algorithm::ItemKnn, grid).size() == 4);
  CHECK(expand_grid(Algorithm::SvdPlusPlus, grid).size() == 36);
  CHECK(expand_grid(Algorithm::ListRankMf, grid).size() == 36);
}

TEST_CASE("grid expansion rejects empty or invalid candidate lists") {
  HyperParamGrid grid;
  grid.neighbors = {};
  CHECK_THROWS_AS(expand_grid(Algorithm::UserKnn, grid), ConfigError);
  CHECK_NOTHROW(expand_grid(Algorithm::SvdPlusPlus, grid));  // unused list may be empty

  grid = HyperParamGrid{};
  grid.neighbors = {10, 0};
  CHECK_THROWS_AS(expand_grid(Algorithm::ItemKnn, grid), ConfigError);

  grid = HyperParamGrid{};
  grid.learning_rate = {0.01, -0.5};
  CHECK_THROWS_AS(expand_grid(Algorithm::ListRankMf, grid), ConfigError);

  grid = HyperParamGrid{};
  grid.epochs = {};
  CHECK_THROWS_AS(expand_grid(Algorithm::SvdPlusPlus, grid), ConfigError);
}

TEST_CASE("a singleton grid selects its only configuration") {
  const SplitPair split = grid_data();
  HyperParamGrid grid;
  grid.neighbors = {3};
  grid.shrinkage = {1.5};
  const auto result = grid_search(Algorithm::UserKnn, split.train, split.test, grid, 5, 1);
  CHECK(result.best_index == 0);
  CHECK(result.best.neighbors == 3);
  CHECK(result.best.shrinkage == 1.5);
  REQUIRE(result.table.size() == 1);
  REQUIRE(result.table[0].precision.has_value());
  CHECK(*result.table[0].precision == result.best_precision);
  CHECK(result.table[0].error.empty());
  CHECK(result.best_precision >= 0.0);
  CHECK(result.best_precision <= 1.0);
}

TEST_CASE("ties between configurations pick the earliest") {
  // With more neighbors than users the two candidate sizes behave
  // identically, so their precisions tie exactly.
  const SplitPair split = grid_data(2);
  HyperParamGrid grid;
  grid.neighbors = {50, 80};
  grid.shrinkage = {0.0};
  const auto result = grid_search(Algorithm::UserKnn, split.train, split.test, grid, 5, 1);
  REQUIRE(result.table.size() == 2);
  REQUIRE(result.table[0].precision.has_value());
  REQUIRE(result.table[1].precision.has_value());
  CHECK(*result.table[0].precision == *result.table[1].precision);
  CHECK(result.best_index == 0);
  CHECK(result.best.neighbors == 50);
}

TEST_CASE("diverging configurations are recorded but not selected") {
  const SplitPair split = grid_data(3);
  HyperParamGrid grid;
  grid.factors = {4};
  grid.learning_rate = {50.0, 0.01};  // the first setting blows up
  grid.l2 = {0.01};
  grid.epochs = {40};
  const auto result =
      grid_search(Algorithm::SvdPlusPlus, split.train, split.test, grid, 5, 1);
  REQUIRE(result.table.size() == 2);
  CHECK(!result.table[0].precision.has_value());
  CHECK(!result.table[0].error.empty());
  REQUIRE(result.table[1].precision.has_value());
  CHECK(result.table[1].error.empty());
  CHECK(result.best_index == 1);
  CHECK(result.best.learning_rate == 0.01);
}

TEST_CASE("a grid where every configuration diverges raises an error") {
  const SplitPair split = grid_data(4);
  HyperParamGrid grid;
  grid.factors = {4};
  grid.learning_rate = {50.0, 80.0};
  grid.l2 = {0.01};
  grid.epochs = {40};
  try {
    grid_search(Algorithm::SvdPlusPlus, split.train, split.test, grid, 5, 1);
    FAIL("expected a divergence error");
  } catch (const TrainingDivergence& e) {
    CHECK(e.epoch() == -1);
  }
}

TEST_CASE("results do not depend on the worker count") {
  const SplitPair split = grid_data(5);
  HyperParamGrid grid;
  grid.neighbors = {2, 4, 8};
  grid.shrinkage = {0.0, 3.0};
  const auto serial = grid_search(Algorithm::ItemKnn, split.train, split.test, grid, 5, 7, 1);
  const auto parallel = grid_search(Algorithm::ItemKnn, split.train, split.test, grid, 5, 7, 4);
  CHECK(serial.best_index == parallel.best_index);
  CHECK(serial.best == parallel.best);
  CHECK(serial.best_precision == parallel.best_precision);
  REQUIRE(serial.table.size() == parallel.table.size());
  for (std::size_t i = 0; i < serial.table.size(); ++i) {
    CHECK(serial.table[i].hp == parallel.table[i].hp);
    CHECK(serial.table[i].precision == parallel.table[i].precision);
    CHECK(serial.table[i].error == parallel.table[i].error);
  }
}

TEST_CASE("grid search validates its preconditions") {
  const SplitPair split = grid_data(6);
  HyperParamGrid grid;
  grid.neighbors = {3};
  CHECK_THROWS_AS(grid_search(Algorithm::UserKnn, split.train, split.test, grid, 0, 1),
                  std::invalid_argument);

  // Rated validation users must exist in the training set.
  DatasetBuilder b;
  b.add_user(9999, Gender::Male).add_item(1, {"A"});
  b.add_rating(9999, 1, 5, 0);
  const RatingDataset foreign = b.build();
  CHECK_THROWS_AS(grid_search(Algorithm::UserKnn, split.train, foreign, grid, 5, 1),
                  std::invalid_argument);

  // A validation set without any rated user is unusable.
  const SplitPair all_train = split_train_test(split.train, 1.0, 1);
  CHECK_THROWS_AS(grid_search(Algorithm::UserKnn, split.train, all_train.test, grid, 5, 1),
                  std::invalid_argument);

  // An empty worker budget is clamped to one worker, not rejected.
  CHECK_NOTHROW(grid_search(Algorithm::UserKnn, split.train, split.test, grid, 5, 1, 0));
}
