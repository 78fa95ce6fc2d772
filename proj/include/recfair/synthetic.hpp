#pragma once

#include <cstdint>
#include <vector>

#include "recfair/dataset.hpp"

namespace recfair {

/// Deterministic synthetic dataset generator (test fixtures, property tests).
struct SyntheticSpec {
  int num_users = 10;
  int num_items = 20;
  double gender_ratio = 0.5;  // fraction of male users, applied exactly (round half up)
  /// Weights over rating_values; drawn independently per rating.
  std::vector<double> rating_distribution = {0.10, 0.20, 0.30, 0.25, 0.15};
  std::vector<double> rating_values = {1, 2, 3, 4, 5};
  int min_profile = 1;   // per-user rating count drawn uniformly in
  int max_profile = 0;   // [min_profile, max_profile]; 0 means num_items
  std::uint64_t seed = 0;
};

/// Same spec twice yields identical datasets; every user rates >= 1 item.
RatingDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace recfair
