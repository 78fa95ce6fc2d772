#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recfair/dataset.hpp"
#include "recfair/grid_search.hpp"
#include "recfair/metrics.hpp"
#include "recfair/recommender.hpp"

namespace recfair {

/// Exactly one source must be set: a MovieLens-layout directory
/// (ratings.dat / users.dat / movies.dat) or a canonical CSV directory
/// written by `ingest`.
struct DataPaths {
  std::string ml1m_dir;
  std::string canonical_dir;
  bool operator==(const DataPaths&) const = default;
};

struct RunConfig {
  DataPaths data;
  std::uint64_t seed = 42;
  double split_ratio = 0.8;
  int k = 10;
  int buckets = 20;
  double alpha = 0.01;
  std::optional<double> min_test_rating;
  std::vector<Algorithm> algorithms{Algorithm::UserKnn, Algorithm::ItemKnn,
                                    Algorithm::SvdPlusPlus, Algorithm::ListRankMf};
  std::vector<Factor> audit_factors{Factor::Anomaly, Factor::Entropy, Factor::Size};
  HyperParamGrid grid;
  /// Fixed hyperparameters per algorithm; grid search is skipped for these.
  std::map<Algorithm, HyperParams> hyperparams;
  int grid_threads = 1;
  std::string out_dir;
};

/// Parses a JSON config file. Unknown keys, malformed JSON, and
/// out-of-range values raise ConfigError.
RunConfig load_run_config(const std::string& path);

/// Value checks shared by every entry point. need_data additionally requires
/// a data source whose path exists; need_out requires a non-empty out_dir.
void validate_run_config(const RunConfig& config, bool need_data, bool need_out);

/// Loads the dataset named by config.data.
RatingDataset load_config_dataset(const RunConfig& config);

/// Serialized resolved configuration (out_dir omitted: the file's location
/// already identifies it, and keeping it out makes reruns byte-comparable).
std::string resolved_config_json(const RunConfig& config);

}  // namespace recfair
