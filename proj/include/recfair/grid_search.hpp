#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "recfair/dataset.hpp"
#include "recfair/recommender.hpp"

namespace recfair {

/// Candidate values per hyperparameter. Neighborhood algorithms expand
/// neighbors x shrinkage; factorization algorithms expand
/// factors x learning_rate x l2 x epochs, in that nesting order.
struct HyperParamGrid {
  std::vector<int> neighbors{10, 30, 50, 80};
  std::vector<double> shrinkage{0.0};
  std::vector<int> factors{20, 50, 100};
  std::vector<double> learning_rate{0.005, 0.01, 0.05};
  std::vector<double> l2{0.01, 0.1};
  std::vector<int> epochs{30, 100};

  bool operator==(const HyperParamGrid&) const = default;
};

/// All configurations for the algorithm, in grid order. Throws ConfigError
/// when a relevant value list is empty or contains an invalid candidate.
std::vector<HyperParams> expand_grid(Algorithm a, const HyperParamGrid& grid);

struct GridEntry {
  HyperParams hp;
  std::optional<double> precision;  // empty when training failed
  std::string error;                // failure reason when precision is empty
};

struct GridSearchResult {
  std::size_t best_index = 0;
  HyperParams best;
  double best_precision = 0.0;
  std::vector<GridEntry> table;  // one entry per configuration, grid order
};

/// Trains every configuration on `train` with the same seed and scores mean
/// precision@k over validation users (every validation rating counts as
/// relevant). Ties pick the earliest configuration. Configurations that
/// diverge are recorded in the table and skipped; if all fail, throws
/// TrainingDivergence with epoch -1. max_threads > 1 evaluates
/// configurations concurrently; results do not depend on thread count.
GridSearchResult grid_search(Algorithm a, const RatingDataset& train,
                             const RatingDataset& validation, const HyperParamGrid& grid, int k,
                             std::uint64_t seed, int max_threads = 1);

}  // namespace recfair
