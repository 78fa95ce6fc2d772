#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "recfair/config.hpp"

namespace recfair {

struct SummaryRow {
  Algorithm algorithm;
  Gender gender;
  int users = 0;                         // users with >= 1 test rating
  double precision = 0.0;                // mean over those users
  std::optional<double> miscalibration;  // mean over users with a defined value
};

struct PipelineResult {
  std::string run_dir;
  std::vector<SummaryRow> summary;  // algorithm order x (male, female)
};

inline constexpr double kGridTrainRatio = 0.9;  // tuning sub-split of the training set

/// Runs load -> split -> tune -> fit -> evaluate -> audit and writes every
/// artifact under config.out_dir:
///   resolved_config.json, dataset_stats.csv, grids/<algo>.csv,
///   models/<algo>.json, outcomes/<algo>.csv,
///   reports/<algo>/<factor>_<metric>_<gender>.{csv,json}, summary.csv
/// Output bytes depend only on the config and input data. Stage failures
/// rethrow the original error type with a stage-tagged message. A run.lock
/// file makes the directory single-instance; progress (when given) receives
/// one line per stage.
PipelineResult run_pipeline(const RunConfig& config, std::ostream* progress = nullptr);

/// Formats the run summary (one row per algorithm x gender).
std::string summary_csv(const std::vector<SummaryRow>& summary);

/// Per-gender dataset statistics as CSV. With skip_empty_genders, genders
/// without users produce no row (an empty dataset yields just the header).
std::string dataset_stats_csv(const RatingDataset& ds, bool skip_empty_genders = false);

}  // namespace recfair
