#include "recfair/svdpp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "recfair/errors.hpp"
#include "recfair/rng.hpp"

namespace recfair {

namespace {

constexpr std::uint64_t kInitStream = 0x5bd;
constexpr double kInitScale = 0.01;

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

// Maps rating positions back to (user index, item index).
struct RatingIndex {
  std::vector<std::uint32_t> user;
  std::vector<std::uint32_t> item;

  explicit RatingIndex(const RatingDataset& ds)
      : user(ds.num_ratings()), item(ds.num_ratings()) {
    for (std::uint32_t u = 0; u < ds.num_users(); ++u) {
      for (const auto& e : ds.user_ratings(u)) {
        user[e.rating] = u;
        item[e.rating] = e.index;
      }
    }
  }
};

void check_shapes(const SvdppParams& params, const RatingDataset& train) {
  const std::size_t nu = train.num_users(), ni = train.num_items();
  const std::size_t f = static_cast<std::size_t>(params.factors);
  if (params.factors < 1 || params.bu.size() != nu || params.bi.size() != ni ||
      params.p.size() != nu * f || params.q.size() != ni * f || params.y.size() != ni * f)
    throw std::invalid_argument("model parameter shapes do not match the dataset");
}

}  // namespace

SvdppParams init_svdpp_params(const RatingDataset& train, int factors, std::uint64_t seed) {
  if (factors < 1) throw std::invalid_argument("factors must be >= 1");
  const std::size_t nu = train.num_users(), ni = train.num_items();
  const std::size_t f = static_cast<std::size_t>(factors);
  SvdppParams params;
  params.mu = train.num_ratings() > 0 ? train.mean_rating() : 0.0;
  params.factors = factors;
  params.bu.assign(nu, 0.0);
  params.bi.assign(ni, 0.0);
  params.p.resize(nu * f);
  params.q.resize(ni * f);
  params.y.resize(ni * f);
  Rng rng(mix_seed(seed, kInitStream));
  for (double& x : params.p) x = rng.uniform(-kInitScale, kInitScale);
  for (double& x : params.q) x = rng.uniform(-kInitScale, kInitScale);
  for (double& x : params.y) x = rng.uniform(-kInitScale, kInitScale);
  return params;
}

double svdpp_loss_and_grad(const SvdppParams& params, const RatingDataset& train,
                           std::span<const std::uint32_t> batch, double l2, SvdppParams* grad) {
  check_shapes(params, train);
  const std::size_t f = static_cast<std::size_t>(params.factors);
  for (std::uint32_t pos : batch)
    if (pos >= train.num_ratings())
      throw std::invalid_argument(fmt::format("rating position {} out of range", pos));

  if (grad) {
    grad->mu = 0.0;
    grad->factors = params.factors;
    grad->bu.assign(params.bu.size(), 0.0);
    grad->bi.assign(params.bi.size(), 0.0);
    grad->p.assign(params.p.size(), 0.0);
    grad->q.assign(params.q.size(), 0.0);
    grad->y.assign(params.y.size(), 0.0);
  }

  RatingIndex rix(train);

  // Implicit-feedback sums for the users present in the batch.
  std::vector<std::uint32_t> touched;
  std::vector<char> seen(train.num_users(), 0);
  for (std::uint32_t pos : batch) {
    const std::uint32_t u = rix.user[pos];
    if (!seen[u]) {
      seen[u] = 1;
      touched.push_back(u);
    }
  }
  std::vector<double> imp(params.p.size(), 0.0);   // reused rows for touched users
  std::vector<double> weight(train.num_users(), 0.0);
  for (std::uint32_t u : touched) {
    auto profile = train.user_ratings(u);
    if (profile.empty()) continue;
    weight[u] = 1.0 / std::sqrt(static_cast<double>(profile.size()));
    double* row = imp.data() + std::size_t(u) * f;
    for (const auto& e : profile) {
      const double* yj = params.y.data() + std::size_t(e.index) * f;
      for (std::size_t k = 0; k < f; ++k) row[k] += yj[k];
    }
  }

  double loss = 0.0;
  std::vector<double> p_eff(f);
  std::vector<double> y_acc(params.p.size(), 0.0);  // per-user sum of 2*err*q(i)
  for (std::uint32_t pos : batch) {
    const std::uint32_t u = rix.user[pos];
    const std::uint32_t i = rix.item[pos];
    const double r = train.ratings()[pos].value;
    const double w = weight[u];
    const double* pu = params.p.data() + std::size_t(u) * f;
    const double* qi = params.q.data() + std::size_t(i) * f;
    const double* impu = imp.data() + std::size_t(u) * f;
    for (std::size_t k = 0; k < f; ++k) p_eff[k] = pu[k] + w * impu[k];
    const double pred = params.mu + params.bu[u] + params.bi[i] + dot(qi, p_eff.data(), params.factors);
    const double err = pred - r;
    loss += err * err;
    if (grad) {
      grad->bu[u] += 2.0 * err;
      grad->bi[i] += 2.0 * err;
      double* gp = grad->p.data() + std::size_t(u) * f;
      double* gq = grad->q.data() + std::size_t(i) * f;
      double* acc = y_acc.data() + std::size_t(u) * f;
      for (std::size_t k = 0; k < f; ++k) {
        gp[k] += 2.0 * err * qi[k];
        gq[k] += 2.0 * err * p_eff[k];
        acc[k] += 2.0 * err * qi[k];
      }
    }
  }

  if (grad) {
    for (std::uint32_t u : touched) {
      const double w = weight[u];
      if (w == 0.0) continue;
      const double* acc = y_acc.data() + std::size_t(u) * f;
      for (const auto& e : train.user_ratings(u)) {
        double* gy = grad->y.data() + std::size_t(e.index) * f;
        for (std::size_t k = 0; k < f; ++k) gy[k] += w * acc[k];
      }
    }
    for (std::size_t k = 0; k < params.bu.size(); ++k) grad->bu[k] += 2.0 * l2 * params.bu[k];
    for (std::size_t k = 0; k < params.bi.size(); ++k) grad->bi[k] += 2.0 * l2 * params.bi[k];
    for (std::size_t k = 0; k < params.p.size(); ++k) grad->p[k] += 2.0 * l2 * params.p[k];
    for (std::size_t k = 0; k < params.q.size(); ++k) grad->q[k] += 2.0 * l2 * params.q[k];
    for (std::size_t k = 0; k < params.y.size(); ++k) grad->y[k] += 2.0 * l2 * params.y[k];
  }

  loss += l2 * (squared_norm(params.bu) + squared_norm(params.bi) + squared_norm(params.p) +
                squared_norm(params.q) + squared_norm(params.y));
  return loss;
}

SvdppModel::SvdppModel(const RatingDataset& train, HyperParams hp, std::uint64_t seed)
    : RecommenderModel(Algorithm::SvdPlusPlus, train, std::move(hp), seed) {}

void SvdppModel::fit() {
  params_ = init_svdpp_params(*train_, hp_.factors, seed_);
  const std::size_t f = static_cast<std::size_t>(hp_.factors);
  const double lr = hp_.learning_rate;
  const double l2 = hp_.l2;

  std::vector<std::uint32_t> all(train_->num_ratings());
  std::iota(all.begin(), all.end(), 0);

  std::vector<double> imp(f), y_acc(f), p_eff(f);
  epoch_losses_.clear();
  epoch_losses_.reserve(static_cast<std::size_t>(hp_.epochs));
  for (int epoch = 0; epoch < hp_.epochs; ++epoch) {
    for (std::uint32_t u = 0; u < train_->num_users(); ++u) {
      auto profile = train_->user_ratings(u);
      if (profile.empty()) continue;
      const double w = 1.0 / std::sqrt(static_cast<double>(profile.size()));
      std::fill(imp.begin(), imp.end(), 0.0);
      for (const auto& e : profile) {
        const double* yj = params_.y.data() + std::size_t(e.index) * f;
        for (std::size_t k = 0; k < f; ++k) imp[k] += yj[k];
      }
      std::fill(y_acc.begin(), y_acc.end(), 0.0);
      double* pu = params_.p.data() + std::size_t(u) * f;
      for (const auto& e : profile) {
        const std::uint32_t i = e.index;
        double* qi = params_.q.data() + std::size_t(i) * f;
        for (std::size_t k = 0; k < f; ++k) p_eff[k] = pu[k] + w * imp[k];
        const double pred =
            params_.mu + params_.bu[u] + params_.bi[i] + dot(qi, p_eff.data(), hp_.factors);
        const double err = e.value - pred;
        params_.bu[u] += lr * (err - l2 * params_.bu[u]);
        params_.bi[i] += lr * (err - l2 * params_.bi[i]);
        for (std::size_t k = 0; k < f; ++k) {
          const double puk = pu[k], qik = qi[k];
          pu[k] += lr * (err * qik - l2 * puk);
          qi[k] += lr * (err * p_eff[k] - l2 * qik);
          y_acc[k] += err * qik;
        }
      }
      for (const auto& e : profile) {
        double* yj = params_.y.data() + std::size_t(e.index) * f;
        for (std::size_t k = 0; k < f; ++k) yj[k] += lr * (w * y_acc[k] - l2 * yj[k]);
      }
    }
    const double loss = svdpp_loss_and_grad(params_, *train_, all, l2, nullptr);
    if (!std::isfinite(loss))
      throw TrainingDivergence(
          epoch, fmt::format("svdpp: non-finite training loss at epoch {}", epoch));
    epoch_losses_.push_back(loss);
  }
  rebuild_user_profiles();
}

void SvdppModel::rebuild_user_profiles() {
  const std::size_t f = static_cast<std::size_t>(hp_.factors);
  p_eff_.assign(train_->num_users() * f, 0.0);
  for (std::uint32_t u = 0; u < train_->num_users(); ++u) {
    double* dst = p_eff_.data() + std::size_t(u) * f;
    const double* pu = params_.p.data() + std::size_t(u) * f;
    auto profile = train_->user_ratings(u);
    const double w = profile.empty() ? 0.0 : 1.0 / std::sqrt(static_cast<double>(profile.size()));
    for (std::size_t k = 0; k < f; ++k) dst[k] = pu[k];
    if (w == 0.0) continue;
    for (const auto& e : profile) {
      const double* yj = params_.y.data() + std::size_t(e.index) * f;
      for (std::size_t k = 0; k < f; ++k) dst[k] += w * yj[k];
    }
  }
}

std::optional<double> SvdppModel::predict_indexed(std::uint32_t u, std::uint32_t i) const {
  const std::size_t f = static_cast<std::size_t>(hp_.factors);
  return params_.mu + params_.bu[u] + params_.bi[i] +
         dot(params_.q.data() + std::size_t(i) * f, p_eff_.data() + std::size_t(u) * f,
             hp_.factors);
}

void SvdppModel::score_candidates(std::uint32_t u, std::span<const char> candidate,
                                  std::span<double> out) const {
  const std::size_t f = static_cast<std::size_t>(hp_.factors);
  const double* pe = p_eff_.data() + std::size_t(u) * f;
  const double base = params_.mu + params_.bu[u];
  for (std::uint32_t i = 0; i < train_->num_items(); ++i) {
    if (!candidate[i]) continue;
    out[i] = base + params_.bi[i] + dot(params_.q.data() + std::size_t(i) * f, pe, hp_.factors);
  }
}

ParamBundle SvdppModel::export_params() const {
  ParamBundle b;
  b.scalars["mu"] = params_.mu;
  b.arrays["bu"] = params_.bu;
  b.arrays["bi"] = params_.bi;
  b.arrays["p"] = params_.p;
  b.arrays["q"] = params_.q;
  b.arrays["y"] = params_.y;
  return b;
}

void SvdppModel::import_params(const ParamBundle& bundle) {
  SvdppParams params;
  params.factors = hp_.factors;
  try {
    params.mu = bundle.scalars.at("mu");
    params.bu = bundle.arrays.at("bu");
    params.bi = bundle.arrays.at("bi");
    params.p = bundle.arrays.at("p");
    params.q = bundle.arrays.at("q");
    params.y = bundle.arrays.at("y");
  } catch (const std::out_of_range&) {
    throw DataError("svdpp checkpoint is missing parameters");
  }
  try {
    check_shapes(params, *train_);
  } catch (const std::invalid_argument& e) {
    throw DataError(fmt::format("svdpp checkpoint: {}", e.what()));
  }
  params_ = std::move(params);
  rebuild_user_profiles();
}

}  // namespace recfair
