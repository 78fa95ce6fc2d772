#pragma once

#include "recfair/recommender.hpp"

namespace recfair {

/// Item-based neighborhood model. Similarity is adjusted cosine: ratings are
/// centered at each co-rater's full-profile mean, optionally damped by
/// cnt/(cnt+shrinkage). Prediction is the similarity-weighted average of the
/// user's own ratings over the top-n positively similar rated items:
///   r(u,i) = sum_j s(i,j) r(u,j) / sum_j s(i,j)
class ItemKnnModel final : public RecommenderModel {
 public:
  ItemKnnModel(const RatingDataset& train, HyperParams hp, std::uint64_t seed);

  /// Pairwise similarity by item id. sim(i,i) is 1 when the centered ratings
  /// of i have positive norm, else 0.
  double similarity(ItemId a, ItemId b) const;

 protected:
  void fit() override;
  std::optional<double> predict_indexed(std::uint32_t u, std::uint32_t i) const override;
  void score_candidates(std::uint32_t u, std::span<const char> candidate,
                        std::span<double> out) const override;

 private:
  const double* sim_row(std::uint32_t i) const { return sim_.data() + std::size_t(i) * num_items_; }

  std::size_t num_items_ = 0;
  std::vector<double> user_means_;  // full training-profile means
  std::vector<double> sim_;         // dense num_items x num_items
};

}  // namespace recfair
