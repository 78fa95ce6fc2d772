#pragma once

#include <cstdint>

#include "recfair/dataset.hpp"

namespace recfair {

/// Disjoint train/test partition. Users, items and the value domain are
/// shared verbatim; only the rating sets differ.
struct SplitPair {
  RatingDataset train;
  RatingDataset test;
  std::uint64_t seed = 0;
  double ratio = 0.0;
};

/// Per-user seeded random split: each user contributes round(ratio * N_u)
/// ratings to train (round half up) and the remainder to test. Users whose
/// test share rounds to zero appear in the test dataset with no ratings.
/// Identical (ds, ratio, seed) yields a bit-identical split.
///
/// Preconditions: 0 < ratio <= 1 and every user has at least one rating.
SplitPair split_train_test(const RatingDataset& ds, double ratio, std::uint64_t seed);

}  // namespace recfair
