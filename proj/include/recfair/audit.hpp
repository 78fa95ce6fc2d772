#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "recfair/dataset.hpp"
#include "recfair/metrics.hpp"
#include "recfair/recommender.hpp"
#include "recfair/split.hpp"

namespace recfair {

struct BucketSpec {
  Factor factor = Factor::Anomaly;
  int num_buckets = 20;
  Gender gender = Gender::Male;
  bool operator==(const BucketSpec&) const = default;
};

struct GroupRow {
  int bucket = 0;
  double mean_factor = 0.0;
  double mean_outcome = 0.0;
  int user_count = 0;  // 0 flags a bucket emptied by outcome exclusions
  bool operator==(const GroupRow&) const = default;
};

struct GroupReport {
  BucketSpec spec;
  Outcome metric = Outcome::Precision;
  std::vector<GroupRow> rows;
  std::optional<double> correlation;  // over rows with user_count > 0
};

/// Sorts (userId, factor) ascending by (factor, userId) and splits into
/// num_buckets contiguous groups: the first N mod B buckets hold ceil(N/B)
/// users, the rest floor(N/B). Throws std::invalid_argument when
/// num_buckets < 2 or the population is smaller than num_buckets.
std::vector<std::vector<UserId>> bucket_users(
    std::span<const std::pair<UserId, double>> population, int num_buckets);

/// Per-bucket arithmetic means. Users absent from `outcomes` are excluded;
/// a bucket emptied this way yields a row with user_count 0 and NaN means.
/// Users absent from `factors` are an error.
std::vector<GroupRow> group_aggregate(const std::vector<std::vector<UserId>>& buckets,
                                      const std::unordered_map<UserId, double>& factors,
                                      const std::unordered_map<UserId, double>& outcomes);

/// Pearson correlation of (mean_factor, mean_outcome) over rows with
/// user_count > 0; std::nullopt when degenerate.
std::optional<double> report_correlation(std::span<const GroupRow> rows);

/// Per-user evaluation outcomes for users with at least one test rating.
/// Precision counts test items as relevant (optionally only those rated at
/// least min_test_rating); miscalibration compares the training-profile
/// genre distribution with the recommendation-list genre distribution and
/// is absent when either list is empty. The model must have been fitted on
/// split.train.
std::vector<OutcomeMetrics> compute_outcomes(const SplitPair& split,
                                             const RecommenderModel& model, int k, double alpha,
                                             std::optional<double> min_test_rating = {});

/// Buckets the spec's gender population over users that have both a factor
/// value and the requested outcome, then aggregates and correlates.
GroupReport audit_report(std::span<const UserFactors> factors,
                         std::span<const OutcomeMetrics> outcomes, const RatingDataset& ds,
                         const BucketSpec& spec, Outcome metric);

/// Convenience wrapper: factors from the full dataset, outcomes from the
/// model on the split.
GroupReport audit_report(const RatingDataset& full, const SplitPair& split,
                         const RecommenderModel& model, const BucketSpec& spec, Outcome metric,
                         int k, double alpha, std::optional<double> min_test_rating = {});

/// CSV rows under the header `bucket,mean_factor,mean_outcome,user_count`.
void write_report_csv(const std::string& path, const GroupReport& report);
/// JSON sidecar with the bucket spec, metric, correlation, algorithm, seed,
/// and tool version.
void write_report_sidecar(const std::string& path, const GroupReport& report,
                          std::string_view algorithm, std::uint64_t seed);

struct ReportMeta {
  BucketSpec spec;
  Outcome metric = Outcome::Precision;
  std::optional<double> correlation;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::string tool_version;
};

std::vector<GroupRow> read_report_csv(const std::string& path);
ReportMeta read_report_sidecar(const std::string& path);

}  // namespace recfair
