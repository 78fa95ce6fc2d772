#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recfair/dataset.hpp"
#include "recfair/recommendation.hpp"

namespace recfair {

enum class Algorithm { UserKnn, ItemKnn, SvdPlusPlus, ListRankMf };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::UserKnn, Algorithm::ItemKnn,
                                               Algorithm::SvdPlusPlus, Algorithm::ListRankMf};

const char* algorithm_tag(Algorithm a);  // "userknn" / "itemknn" / "svdpp" / "listrankmf"
std::optional<Algorithm> algorithm_from_tag(std::string_view tag);

struct HyperParams {
  // neighborhood models
  int neighbors = 50;
  double shrinkage = 0.0;
  // matrix factorization models
  int factors = 50;
  double learning_rate = 0.01;
  double l2 = 0.01;
  int epochs = 30;
  bool operator==(const HyperParams&) const = default;
};

/// Throws ConfigError when hp is invalid for the algorithm.
void validate_hyperparams(Algorithm a, const HyperParams& hp);

/// Serialized model state; KNN models carry no arrays (state is refit from
/// the training set on load).
struct ParamBundle {
  std::map<std::string, double> scalars;
  std::map<std::string, std::vector<double>> arrays;
};

/// A fitted recommender. Immutable after fit; recommend() and predict() are
/// safe for concurrent calls. The model keeps a reference to its training
/// dataset, which must outlive it.
class RecommenderModel {
 public:
  virtual ~RecommenderModel() = default;

  Algorithm algorithm() const { return algorithm_; }
  const HyperParams& hyperparams() const { return hp_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t train_fingerprint() const { return train_->fingerprint(); }
  const RatingDataset& train() const { return *train_; }
  /// Training loss per epoch (MF models); empty for KNN models.
  std::span<const double> epoch_losses() const { return epoch_losses_; }

  /// Predicted score, or std::nullopt when the pair is unscorable.
  /// Throws std::invalid_argument for ids absent from the training set.
  std::optional<double> predict(UserId u, ItemId i) const;

  /// Top-k unrated items by predicted score, ties broken by ascending item
  /// id. Candidates are training-set items outside u's training profile.
  RecommendationList recommend(UserId u, int k) const;

  /// Writes a self-describing JSON checkpoint.
  void save(const std::string& path) const;

 protected:
  RecommenderModel(Algorithm a, const RatingDataset& train, HyperParams hp, std::uint64_t seed)
      : algorithm_(a), train_(&train), hp_(std::move(hp)), seed_(seed) {}

  virtual std::optional<double> predict_indexed(std::uint32_t u, std::uint32_t i) const = 0;
  /// Fills scores for scorable candidate items; non-candidates stay NaN.
  virtual void score_candidates(std::uint32_t u, std::span<const char> candidate,
                                std::span<double> out) const = 0;

  friend std::unique_ptr<RecommenderModel> fit_model(Algorithm, const RatingDataset&,
                                                     const HyperParams&, std::uint64_t);
  friend std::unique_ptr<RecommenderModel> load_model(const std::string&, const RatingDataset&);
  virtual void fit() = 0;
  virtual ParamBundle export_params() const { return {}; }
  /// Restores exported state; models whose export is empty refit instead.
  virtual void import_params(const ParamBundle&) {}

  Algorithm algorithm_;
  const RatingDataset* train_;
  HyperParams hp_;
  std::uint64_t seed_;
  std::vector<double> epoch_losses_;
};

/// Trains a model. Deterministic given (train, hp, seed). Throws DataError
/// on an empty training set, ConfigError on invalid hp, and
/// TrainingDivergence when training produces non-finite values.
std::unique_ptr<RecommenderModel> fit_model(Algorithm a, const RatingDataset& train,
                                            const HyperParams& hp, std::uint64_t seed);

/// Loads a checkpoint written by save(). The training set must match the
/// stored fingerprint; the result reproduces the saved model's
/// recommendations exactly.
std::unique_ptr<RecommenderModel> load_model(const std::string& path,
                                             const RatingDataset& train);

}  // namespace recfair
