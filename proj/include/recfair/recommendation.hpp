#pragma once

#include <vector>

#include "recfair/dataset.hpp"

namespace recfair {

struct ScoredItem {
  ItemId item;
  double score;
  bool operator==(const ScoredItem&) const = default;
};

/// Ranked top-k list for one user: scores non-increasing, no duplicates,
/// disjoint from the user's training profile.
struct RecommendationList {
  UserId user = 0;
  std::vector<ScoredItem> entries;
  bool operator==(const RecommendationList&) const = default;
};

}  // namespace recfair
