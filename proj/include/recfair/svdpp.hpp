#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "recfair/recommender.hpp"

namespace recfair {

/// Parameters of the implicit-feedback matrix factorization model
///   r(u,i) = mu + bu(u) + bi(i) + q(i) . (p(u) + |N(u)|^-1/2 sum_{j in N(u)} y(j))
/// where N(u) is the set of items u rated in the training set.
struct SvdppParams {
  double mu = 0.0;
  int factors = 0;
  std::vector<double> bu;  // num_users
  std::vector<double> bi;  // num_items
  std::vector<double> p;   // num_users x factors, row-major
  std::vector<double> q;   // num_items x factors, row-major
  std::vector<double> y;   // num_items x factors, row-major
};

/// mu = global train mean; biases zero; factor entries uniform in
/// (-0.01, 0.01), deterministic in seed.
SvdppParams init_svdpp_params(const RatingDataset& train, int factors, std::uint64_t seed);

/// Squared-error batch objective with L2 penalty:
///   sum_{(u,i) in batch} (r - rhat)^2 + l2 * (|bu|^2+|bi|^2+|p|^2+|q|^2+|y|^2)
/// batch holds rating positions into train.ratings(). When grad is non-null
/// it receives the exact analytic gradient (same shapes as params).
double svdpp_loss_and_grad(const SvdppParams& params, const RatingDataset& train,
                           std::span<const std::uint32_t> batch, double l2, SvdppParams* grad);

class SvdppModel final : public RecommenderModel {
 public:
  SvdppModel(const RatingDataset& train, HyperParams hp, std::uint64_t seed);

  const SvdppParams& params() const { return params_; }

 protected:
  void fit() override;
  std::optional<double> predict_indexed(std::uint32_t u, std::uint32_t i) const override;
  void score_candidates(std::uint32_t u, std::span<const char> candidate,
                        std::span<double> out) const override;
  ParamBundle export_params() const override;
  void import_params(const ParamBundle& bundle) override;

 private:
  void rebuild_user_profiles();  // caches p(u) + |N(u)|^-1/2 sum y(j)

  SvdppParams params_;
  std::vector<double> p_eff_;  // num_users x factors
};

}  // namespace recfair
