#pragma once

#include "recfair/recommender.hpp"

namespace recfair {

/// User-based neighborhood model. Similarity is the Pearson correlation of
/// mean-centered ratings over each pair's co-rated items (means taken over
/// the co-rated subset), optionally damped by cnt/(cnt+shrinkage).
/// Prediction centers neighbors at their full-profile means:
///   r(u,i) = mean(u) + sum_v s(u,v)(r(v,i) - mean(v)) / sum_v s(u,v)
/// over the top-n positively similar neighbors that rated i.
class UserKnnModel final : public RecommenderModel {
 public:
  UserKnnModel(const RatingDataset& train, HyperParams hp, std::uint64_t seed);

  /// Pairwise similarity by user id; 0 when fewer than 2 co-rated items or
  /// either side has zero variance on the co-rated subset.
  double similarity(UserId a, UserId b) const;
  double user_mean(UserId u) const;

 protected:
  void fit() override;
  std::optional<double> predict_indexed(std::uint32_t u, std::uint32_t i) const override;
  void score_candidates(std::uint32_t u, std::span<const char> candidate,
                        std::span<double> out) const override;

 private:
  double similarity_indexed(std::uint32_t a, std::uint32_t b) const;
  void similarity_row(std::uint32_t u, std::span<double> sims) const;

  std::vector<double> user_means_;  // full training-profile means
};

}  // namespace recfair
