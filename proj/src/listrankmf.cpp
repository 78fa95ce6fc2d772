#include "recfair/listrankmf.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "recfair/errors.hpp"
#include "recfair/rng.hpp"

namespace recfair {

namespace {

constexpr std::uint64_t kInitStream = 0x117a;
constexpr double kInitScale = 0.01;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double dot(const double* a, const double* b, int f) {
  double s = 0.0;
  for (int k = 0; k < f; ++k) s += a[k] * b[k];
  return s;
}

double squared_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void check_shapes(const ListRankParams& params, const RatingDataset& train) {
  const std::size_t f = static_cast<std::size_t>(params.factors);
  if (params.factors < 1 || params.uf.size() != train.num_users() * f ||
      params.vf.size() != train.num_items() * f)
    throw std::invalid_argument("model parameter shapes do not match the dataset");
}

}  // namespace

ListRankParams init_listrank_params(const RatingDataset& train, int factors, std::uint64_t seed) {
  if (factors < 1) throw std::invalid_argument("factors must be >= 1");
  const std::size_t f = static_cast<std::size_t>(factors);
  ListRankParams params;
  params.factors = factors;
  params.uf.resize(train.num_users() * f);
  params.vf.resize(train.num_items() * f);
  Rng rng(mix_seed(seed, kInitStream));
  for (double& x : params.uf) x = rng.uniform(-kInitScale, kInitScale);
  for (double& x : params.vf) x = rng.uniform(-kInitScale, kInitScale);
  return params;
}

double listrank_loss_and_grad(const ListRankParams& params, const RatingDataset& train,
                              std::span<const std::uint32_t> users, double l2,
                              ListRankParams* grad) {
  check_shapes(params, train);
  const std::size_t f = static_cast<std::size_t>(params.factors);
  for (std::uint32_t u : users)
    if (u >= train.num_users())
      throw std::invalid_argument(fmt::format("user index {} out of range", u));

  if (grad) {
    grad->factors = params.factors;
    grad->uf.assign(params.uf.size(), 0.0);
    grad->vf.assign(params.vf.size(), 0.0);
  }

  double loss = 0.0;
  std::vector<double> target;  // top-one probabilities of the observed ratings
  std::vector<double> score;   // logistic-transformed model scores
  for (std::uint32_t u : users) {
    auto profile = train.user_ratings(u);
    if (profile.empty()) continue;
    const std::size_t n = profile.size();
    target.resize(n);
    score.resize(n);
    const double* uu = params.uf.data() + std::size_t(u) * f;

    double target_sum = 0.0, score_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      target[k] = std::exp(logistic(profile[k].value));
      target_sum += target[k];
      score[k] = logistic(dot(uu, params.vf.data() + std::size_t(profile[k].index) * f,
                              params.factors));
      score_sum += std::exp(score[k]);
    }
    const double lse = std::log(score_sum);
    for (std::size_t k = 0; k < n; ++k) {
      const double p = target[k] / target_sum;
      loss += p * (lse - score[k]);
      if (grad) {
        const double q = std::exp(score[k]) / score_sum;
        // d loss / d s_k through the softmax and the logistic transform
        const double ds = (q - p) * score[k] * (1.0 - score[k]);
        double* gu = grad->uf.data() + std::size_t(u) * f;
        double* gv = grad->vf.data() + std::size_t(profile[k].index) * f;
        const double* vi = params.vf.data() + std::size_t(profile[k].index) * f;
        for (std::size_t d = 0; d < f; ++d) {
          gu[d] += ds * vi[d];
          gv[d] += ds * uu[d];
        }
      }
    }
  }

  if (grad) {
    for (std::size_t k = 0; k < params.uf.size(); ++k) grad->uf[k] += l2 * params.uf[k];
    for (std::size_t k = 0; k < params.vf.size(); ++k) grad->vf[k] += l2 * params.vf[k];
  }
  loss += 0.5 * l2 * (squared_norm(params.uf) + squared_norm(params.vf));
  return loss;
}

ListRankMfModel::ListRankMfModel(const RatingDataset& train, HyperParams hp, std::uint64_t seed)
    : RecommenderModel(Algorithm::ListRankMf, train, std::move(hp), seed) {}

void ListRankMfModel::fit() {
  params_ = init_listrank_params(*train_, hp_.factors, seed_);
  std::vector<std::uint32_t> all(train_->num_users());
  std::iota(all.begin(), all.end(), 0);

  ListRankParams grad;
  epoch_losses_.clear();
  epoch_losses_.reserve(static_cast<std::size_t>(hp_.epochs));
  for (int epoch = 0; epoch < hp_.epochs; ++epoch) {
    listrank_loss_and_grad(params_, *train_, all, hp_.l2, &grad);
    for (std::size_t k = 0; k < params_.uf.size(); ++k)
      params_.uf[k] -= hp_.learning_rate * grad.uf[k];
    for (std::size_t k = 0; k < params_.vf.size(); ++k)
      params_.vf[k] -= hp_.learning_rate * grad.vf[k];
    const double loss = listrank_loss_and_grad(params_, *train_, all, hp_.l2, nullptr);
    if (!std::isfinite(loss))
      throw TrainingDivergence(
          epoch, fmt::format("listrankmf: non-finite training loss at epoch {}", epoch));
    epoch_losses_.push_back(loss);
  }
}

std::optional<double> ListRankMfModel::predict_indexed(std::uint32_t u, std::uint32_t i) const {
  const std::size_t f = static_cast<std::size_t>(hp_.factors);
  return dot(params_.uf.data() + std::size_t(u) * f, params_.vf.data() + std::size_t(i) * f,
             hp_.factors);
}

void ListRankMfModel::score_candidates(std::uint32_t u, std::span<const char> candidate,
                                       std::span<double> out) const {
  const std::size_t f = static_cast<std::size_t>(hp_.factors);
  const double* uu = params_.uf.data() + std::size_t(u) * f;
  for (std::uint32_t i = 0; i < train_->num_items(); ++i) {
    if (!candidate[i]) continue;
    out[i] = dot(uu, params_.vf.data() + std::size_t(i) * f, hp_.factors);
  }
}

ParamBundle ListRankMfModel::export_params() const {
  ParamBundle b;
  b.arrays["uf"] = params_.uf;
  b.arrays["vf"] = params_.vf;
  return b;
}

void ListRankMfModel::import_params(const ParamBundle& bundle) {
  ListRankParams params;
  params.factors = hp_.factors;
  try {
    params.uf = bundle.arrays.at("uf");
    params.vf = bundle.arrays.at("vf");
  } catch (const std::out_of_range&) {
    throw DataError("listrankmf checkpoint is missing parameters");
  }
  try {
    check_shapes(params, *train_);
  } catch (const std::invalid_argument& e) {
    throw DataError(fmt::format("listrankmf checkpoint: {}", e.what()));
  }
  params_ = std::move(params);
}

}  // namespace recfair
