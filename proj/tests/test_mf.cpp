#include "doctest.h"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "recfair/errors.hpp"
#include "recfair/listrankmf.hpp"
#include "recfair/rng.hpp"
#include "recfair/svdpp.hpp"
#include "recfair/synthetic.hpp"

using namespace recfair;

namespace {

RatingDataset mf_dataset(std::uint64_t seed = 9, int users = 6, int items = 8) {
  SyntheticSpec spec;
  spec.num_users = users;
  spec.num_items = items;
  spec.min_profile = 2;
  spec.seed = seed;
  return generate_synthetic(spec);
}

// Moves the parameter point away from the near-zero init so gradients have
// non-trivial magnitudes at the probe.
void randomize(std::vector<double>& v, Rng& rng, double scale) {
  for (double& x : v) x = rng.uniform(-scale, scale);
}

std::vector<std::uint32_t> all_positions(const RatingDataset& ds) {
  std::vector<std::uint32_t> all(ds.num_ratings());
  std::iota(all.begin(), all.end(), 0);
  return all;
}

std::vector<std::uint32_t> all_users(const RatingDataset& ds) {
  std::vector<std::uint32_t> all(ds.num_users());
  std::iota(all.begin(), all.end(), 0);
  return all;
}

double dot_all(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(std::vector<double>& y, double t, const std::vector<double>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += t * x[i];
}

}  // namespace

TEST_CASE("rating objective gradient matches central differences") {
  const RatingDataset ds = mf_dataset();
  const auto batch = all_positions(ds);
  const double l2 = 0.03;

  for (std::uint64_t point : {11ull, 12ull, 13ull}) {
    SvdppParams params = init_svdpp_params(ds, 3, 7);
    Rng rng(mix_seed(point, 99));
    randomize(params.bu, rng, 0.3);
    randomize(params.bi, rng, 0.3);
    randomize(params.p, rng, 0.6);
    randomize(params.q, rng, 0.6);
    randomize(params.y, rng, 0.6);

    SvdppParams grad;
    svdpp_loss_and_grad(params, ds, batch, l2, &grad);
    CHECK(grad.mu == 0.0);  // the global mean is frozen after init

    auto loss_at = [&] { return svdpp_loss_and_grad(params, ds, batch, l2, nullptr); };

    // Directional derivative along a random direction covers every
    // coordinate at once.
    SvdppParams dir = grad;
    dir.mu = 0.0;
    randomize(dir.bu, rng, 1.0);
    randomize(dir.bi, rng, 1.0);
    randomize(dir.p, rng, 1.0);
    randomize(dir.q, rng, 1.0);
    randomize(dir.y, rng, 1.0);
    const double analytic_dir = dot_all(grad.bu, dir.bu) + dot_all(grad.bi, dir.bi) +
                                dot_all(grad.p, dir.p) + dot_all(grad.q, dir.q) +
                                dot_all(grad.y, dir.y);
    const double h = 1e-6;
    SvdppParams plus = params, minus = params;
    for (auto [dst, d] : {std::pair{&plus, 1.0}, std::pair{&minus, -1.0}}) {
      axpy(dst->bu, d * h, dir.bu);
      axpy(dst->bi, d * h, dir.bi);
      axpy(dst->p, d * h, dir.p);
      axpy(dst->q, d * h, dir.q);
      axpy(dst->y, d * h, dir.y);
    }
    const double fd_dir = (svdpp_loss_and_grad(plus, ds, batch, l2, nullptr) -
                           svdpp_loss_and_grad(minus, ds, batch, l2, nullptr)) /
                          (2.0 * h);
    CHECK(oracle::relative_error(fd_dir, analytic_dir) < 1e-4);

    // Spot-check individual coordinates of every parameter block.
    auto check_coord = [&](std::vector<double>& block, const std::vector<double>& gblock) {
      for (std::size_t idx : {std::size_t{0}, block.size() / 2, block.size() - 1}) {
        const double fd = oracle::central_difference(loss_at, block[idx], 1e-5);
        CHECK(oracle::relative_error(fd, gblock[idx]) < 1e-4);
      }
    };
    check_coord(params.bu, grad.bu);
    check_coord(params.bi, grad.bi);
    check_coord(params.p, grad.p);
    check_coord(params.q, grad.q);
    check_coord(params.y, grad.y);
  }
}

TEST_CASE("ranking objective gradient matches central differences") {
  const RatingDataset ds = mf_dataset(17);
  const auto users = all_users(ds);
  const double l2 = 0.07;

  for (std::uint64_t point : {21ull, 22ull, 23ull}) {
    ListRankParams params = init_listrank_params(ds, 3, 5);
    Rng rng(mix_seed(point, 98));
    randomize(params.uf, rng, 0.8);
    randomize(params.vf, rng, 0.8);

    ListRankParams grad;
    listrank_loss_and_grad(params, ds, users, l2, &grad);
    auto loss_at = [&] { return listrank_loss_and_grad(params, ds, users, l2, nullptr); };

    ListRankParams dir = params;
    randomize(dir.uf, rng, 1.0);
    randomize(dir.vf, rng, 1.0);
    const double analytic_dir = dot_all(grad.uf, dir.uf) + dot_all(grad.vf, dir.vf);
    const double h = 1e-6;
    ListRankParams plus = params, minus = params;
    axpy(plus.uf, h, dir.uf);
    axpy(plus.vf, h, dir.vf);
    axpy(minus.uf, -h, dir.uf);
    axpy(minus.vf, -h, dir.vf);
    const double fd_dir = (listrank_loss_and_grad(plus, ds, users, l2, nullptr) -
                           listrank_loss_and_grad(minus, ds, users, l2, nullptr)) /
                          (2.0 * h);
    CHECK(oracle::relative_error(fd_dir, analytic_dir) < 1e-4);

    auto check_coord = [&](std::vector<double>& block, const std::vector<double>& gblock) {
      for (std::size_t idx : {std::size_t{0}, block.size() / 2, block.size() - 1}) {
        const double fd = oracle::central_difference(loss_at, block[idx], 1e-5);
        CHECK(oracle::relative_error(fd, gblock[idx]) < 1e-4);
      }
    };
    check_coord(params.uf, grad.uf);
    check_coord(params.vf, grad.vf);
  }
}

TEST_CASE("losses decompose additively without regularization") {
  const RatingDataset ds = mf_dataset(31);

  const auto batch = all_positions(ds);
  SvdppParams sp = init_svdpp_params(ds, 4, 3);
  const std::size_t mid = batch.size() / 2;
  const std::span<const std::uint32_t> whole(batch);
  const double full = svdpp_loss_and_grad(sp, ds, whole, 0.0, nullptr);
  const double front = svdpp_loss_and_grad(sp, ds, whole.subspan(0, mid), 0.0, nullptr);
  const double back = svdpp_loss_and_grad(sp, ds, whole.subspan(mid), 0.0, nullptr);
  CHECK(full == doctest::Approx(front + back).epsilon(1e-12));

  const auto users = all_users(ds);
  ListRankParams lp = init_listrank_params(ds, 4, 3);
  const std::span<const std::uint32_t> uspan(users);
  const double ufull = listrank_loss_and_grad(lp, ds, uspan, 0.0, nullptr);
  double usum = 0.0;
  for (std::size_t i = 0; i < users.size(); ++i)
    usum += listrank_loss_and_grad(lp, ds, uspan.subspan(i, 1), 0.0, nullptr);
  CHECK(ufull == doctest::Approx(usum).epsilon(1e-12));
}

TEST_CASE("the regularization penalty is linear in its weight") {
  const RatingDataset ds = mf_dataset(32);

  SvdppParams sp = init_svdpp_params(ds, 4, 8);
  Rng rng(mix_seed(5, 97));
  randomize(sp.bu, rng, 0.3);
  randomize(sp.p, rng, 0.5);
  const auto batch = all_positions(ds);
  const double l0 = svdpp_loss_and_grad(sp, ds, batch, 0.0, nullptr);
  const double l1 = svdpp_loss_and_grad(sp, ds, batch, 0.1, nullptr);
  const double l2x = svdpp_loss_and_grad(sp, ds, batch, 0.2, nullptr);
  CHECK(l2x - l1 == doctest::Approx(l1 - l0).epsilon(1e-9));

  ListRankParams lp = init_listrank_params(ds, 4, 8);
  randomize(lp.uf, rng, 0.5);
  const auto users = all_users(ds);
  const double m0 = listrank_loss_and_grad(lp, ds, users, 0.0, nullptr);
  const double m1 = listrank_loss_and_grad(lp, ds, users, 0.1, nullptr);
  const double m2 = listrank_loss_and_grad(lp, ds, users, 0.2, nullptr);
  CHECK(m2 - m1 == doctest::Approx(m1 - m0).epsilon(1e-9));
}

TEST_CASE("training loss decreases monotonically at a small learning rate") {
  SyntheticSpec spec;
  spec.num_users = 12;
  spec.num_items = 10;
  spec.min_profile = 3;
  spec.seed = 4;
  const RatingDataset ds = generate_synthetic(spec);

  HyperParams sg;
  sg.factors = 4;
  sg.learning_rate = 0.002;
  sg.l2 = 0.01;
  sg.epochs = 15;
  const auto svdpp = fit_model(Algorithm::SvdPlusPlus, ds, sg, 1);
  const auto sl = svdpp->epoch_losses();
  REQUIRE(sl.size() == 15);
  for (std::size_t e = 1; e < sl.size(); ++e) CHECK(sl[e] <= sl[e - 1] * (1.0 + 1e-9));
  CHECK(sl.back() < sl.front());

  HyperParams lg;
  lg.factors = 4;
  lg.learning_rate = 0.01;
  lg.l2 = 0.01;
  lg.epochs = 25;
  const auto listrank = fit_model(Algorithm::ListRankMf, ds, lg, 1);
  const auto ll = listrank->epoch_losses();
  REQUIRE(ll.size() == 25);
  for (std::size_t e = 1; e < ll.size(); ++e) CHECK(ll[e] <= ll[e - 1] * (1.0 + 1e-9));
  CHECK(ll.back() < ll.front());
}

TEST_CASE("runaway learning rates raise a divergence error with the epoch") {
  const RatingDataset ds = mf_dataset(33);

  HyperParams sg;
  sg.factors = 8;
  sg.learning_rate = 5.0;
  sg.l2 = 0.0;
  sg.epochs = 200;
  try {
    fit_model(Algorithm::SvdPlusPlus, ds, sg, 2);
    FAIL("svdpp training should have diverged");
  } catch (const TrainingDivergence& e) {
    CHECK(e.epoch() >= 0);
    CHECK(e.epoch() < 200);
  }

  HyperParams lg;
  lg.factors = 4;
  lg.learning_rate = 1e4;
  lg.l2 = 1e4;
  lg.epochs = 100;
  try {
    fit_model(Algorithm::ListRankMf, ds, lg, 2);
    FAIL("listrank training should have diverged");
  } catch (const TrainingDivergence& e) {
    CHECK(e.epoch() >= 0);
    CHECK(e.epoch() < 100);
  }
}

TEST_CASE("an untrained rating model predicts near the global mean") {
  SyntheticSpec spec;
  spec.num_users = 8;
  spec.num_items = 10;
  spec.seed = 6;
  const RatingDataset ds = generate_synthetic(spec);

  HyperParams hp;
  hp.factors = 50;
  hp.epochs = 0;
  const auto model = fit_model(Algorithm::SvdPlusPlus, ds, hp, 3);
  CHECK(model->epoch_losses().empty());
  const double mu = ds.mean_rating();
  for (const UserRecord& u : ds.users())
    for (const ItemRecord& i : ds.items()) {
      const auto p = model->predict(u.id, i.id);
      REQUIRE(p.has_value());
      CHECK(std::abs(*p - mu) < 0.05);  // biases are zero, factors are tiny
    }
}

TEST_CASE("single-item profiles carry no ranking information") {
  DatasetBuilder b;
  b.add_user(1, Gender::Male).add_user(2, Gender::Female).add_user(3, Gender::Male);
  b.add_item(10, {"A"}).add_item(20, {"B"}).add_item(30, {"C"});
  b.add_rating(1, 10, 5, 0).add_rating(2, 20, 1, 1).add_rating(3, 30, 3, 2);
  const RatingDataset ds = b.build();
  // Every per-user list has one entry: the target and model softmax both
  // collapse to 1, leaving only log/exp round-trip noise in the data term.
  ListRankParams params = init_listrank_params(ds, 4, 1);
  const auto users = all_users(ds);
  CHECK(std::abs(listrank_loss_and_grad(params, ds, users, 0.0, nullptr)) < 1e-12);
}

TEST_CASE("factor initialization is deterministic in the seed") {
  const RatingDataset ds = mf_dataset(34);

  const SvdppParams a = init_svdpp_params(ds, 5, 42);
  const SvdppParams b = init_svdpp_params(ds, 5, 42);
  const SvdppParams c = init_svdpp_params(ds, 5, 43);
  CHECK(a.p == b.p);
  CHECK(a.q == b.q);
  CHECK(a.y == b.y);
  CHECK(a.p != c.p);
  CHECK(a.mu == doctest::Approx(ds.mean_rating()));
  CHECK(a.bu == std::vector<double>(ds.num_users(), 0.0));
  CHECK(a.bi == std::vector<double>(ds.num_items(), 0.0));
  for (double x : a.p) {
    CHECK(x > -0.01);
    CHECK(x < 0.01);
  }

  const ListRankParams la = init_listrank_params(ds, 5, 42);
  const ListRankParams lb = init_listrank_params(ds, 5, 42);
  CHECK(la.uf == lb.uf);
  CHECK(la.vf == lb.vf);
  CHECK(la.uf != init_listrank_params(ds, 5, 43).uf);
  CHECK(la.uf.size() == ds.num_users() * 5);
  CHECK(la.vf.size() == ds.num_items() * 5);
}

TEST_CASE("objective entry points validate their inputs") {
  const RatingDataset ds = mf_dataset(35);
  CHECK_THROWS_AS(init_svdpp_params(ds, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_listrank_params(ds, 0, 1), std::invalid_argument);

  SvdppParams sp = init_svdpp_params(ds, 3, 1);
  sp.bu.pop_back();  // shape mismatch
  CHECK_THROWS_AS(svdpp_loss_and_grad(sp, ds, {}, 0.0, nullptr), std::invalid_argument);

  SvdppParams ok = init_svdpp_params(ds, 3, 1);
  const std::vector<std::uint32_t> bad_pos{static_cast<std::uint32_t>(ds.num_ratings())};
  CHECK_THROWS_AS(svdpp_loss_and_grad(ok, ds, bad_pos, 0.0, nullptr), std::invalid_argument);

  ListRankParams lp = init_listrank_params(ds, 3, 1);
  lp.vf.pop_back();
  CHECK_THROWS_AS(listrank_loss_and_grad(lp, ds, {}, 0.0, nullptr), std::invalid_argument);

  ListRankParams lok = init_listrank_params(ds, 3, 1);
  const std::vector<std::uint32_t> bad_user{static_cast<std::uint32_t>(ds.num_users())};
  CHECK_THROWS_AS(listrank_loss_and_grad(lok, ds, bad_user, 0.0, nullptr), std::invalid_argument);
}
