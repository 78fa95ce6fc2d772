#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "recfair/recommender.hpp"

namespace recfair {

/// Parameters of the listwise ranking factorization model. Scores are
/// s(u,i) = uf(u) . vf(i); they rank items and are not rating estimates.
struct ListRankParams {
  int factors = 0;
  std::vector<double> uf;  // num_users x factors, row-major
  std::vector<double> vf;  // num_items x factors, row-major
};

/// Factor entries uniform in (-0.01, 0.01), deterministic in seed.
ListRankParams init_listrank_params(const RatingDataset& train, int factors, std::uint64_t seed);

/// Listwise cross-entropy objective over the given users with L2 penalty:
///   sum_u -sum_{i in R(u)} P(u,i) ln Q(u,i) + l2/2 * (|uf|^2 + |vf|^2)
/// where P is the softmax of g(r(u,i)) and Q the softmax of g(s(u,i)) over
/// u's training profile, g the logistic function. users holds user indices.
/// When grad is non-null it receives the exact analytic gradient.
double listrank_loss_and_grad(const ListRankParams& params, const RatingDataset& train,
                              std::span<const std::uint32_t> users, double l2,
                              ListRankParams* grad);

/// Trained by full-batch gradient descent on the objective above.
class ListRankMfModel final : public RecommenderModel {
 public:
  ListRankMfModel(const RatingDataset& train, HyperParams hp, std::uint64_t seed);

  const ListRankParams& params() const { return params_; }

 protected:
  void fit() override;
  std::optional<double> predict_indexed(std::uint32_t u, std::uint32_t i) const override;
  void score_candidates(std::uint32_t u, std::span<const char> candidate,
                        std::span<double> out) const override;
  ParamBundle export_params() const override;
  void import_params(const ParamBundle& bundle) override;

 private:
  ListRankParams params_;
};

}  // namespace recfair
