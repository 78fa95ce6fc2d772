#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "recfair/dataset.hpp"
#include "recfair/recommendation.hpp"

namespace recfair {

enum class Factor { Anomaly, Entropy, Size };
enum class Outcome { Precision, Miscalibration };

const char* factor_tag(Factor f);    // "anomaly" / "entropy" / "size"
const char* outcome_tag(Outcome m);  // "precision" / "miscalibration"
std::optional<Factor> factor_from_tag(std::string_view tag);
std::optional<Outcome> outcome_from_tag(std::string_view tag);

/// Per-user profile factors, computed on the full dataset.
struct UserFactors {
  UserId user;
  double anomaly;  // [0, max rating - min rating]
  double entropy;  // nats, [0, ln |V|]
  int size;        // N_u >= 1
  double factor(Factor f) const;
};

struct OutcomeMetrics {
  UserId user;
  double precision;                      // [0, 1]
  std::optional<double> miscalibration;  // nats; empty when the list was empty
};

/// Mean rating per item index; NaN for items with no ratings.
std::vector<double> item_mean_ratings(const RatingDataset& ds);

/// Mean absolute deviation of u's ratings from the per-item mean ratings.
double profile_anomaly(const RatingDataset& ds, UserId u);
/// Same, with item means supplied (e.g. means over a different basis).
/// Profile items without a finite mean are skipped; NaN if none remain.
double profile_anomaly(const RatingDataset& ds, std::uint32_t user_idx,
                       std::span<const double> item_means);

/// Shannon entropy (nats) of u's rating-value distribution over the domain.
double profile_entropy(const RatingDataset& ds, UserId u);

/// Number of ratings in u's profile.
std::size_t profile_size(const RatingDataset& ds, UserId u);

/// Factors for every user with a non-empty profile, ascending by user id.
/// Item means are taken from mean_basis (pass ds itself for full-dataset means).
std::vector<UserFactors> compute_user_factors(const RatingDataset& ds,
                                              const RatingDataset& mean_basis);
std::vector<UserFactors> compute_user_factors(const RatingDataset& ds);

/// |top-k(rec) ∩ test| / k. The denominator is k even when fewer than k
/// items were scorable.
double precision_at_k(const RecommendationList& rec,
                      const std::unordered_set<ItemId>& test_items, int k);

/// Probability per genre; keys ordered, values sum to 1.
using GenreDistribution = std::map<std::string, double>;

/// Each item contributes its weight split uniformly across its genres.
GenreDistribution genre_distribution(std::span<const std::pair<ItemId, double>> items,
                                     const RatingDataset& ds);

/// KL(p || q~) in nats with q~ = (1-alpha) q + alpha p; zero-probability
/// p terms contribute 0. Both inputs must be valid distributions.
double miscalibration(const GenreDistribution& p, const GenreDistribution& q, double alpha);
/// Vector form over a shared genre universe (index-aligned).
double miscalibration(std::span<const double> p, std::span<const double> q, double alpha);

/// Pearson r; std::nullopt when either side has zero variance.
std::optional<double> pearson_correlation(std::span<const double> x, std::span<const double> y);

/// Per-gender factor summary (Table-style dataset statistics).
struct GenderStats {
  Gender gender;
  std::size_t users = 0;
  std::size_t ratings = 0;
  double mean_anomaly = 0.0;
  double mean_entropy = 0.0;
  double mean_size = 0.0;
};
std::vector<GenderStats> gender_stats(const RatingDataset& ds);

}  // namespace recfair
