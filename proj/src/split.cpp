#include "recfair/split.hpp"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

#include "recfair/rng.hpp"

namespace recfair {

SplitPair split_train_test(const RatingDataset& ds, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw std::invalid_argument(fmt::format("split ratio {} outside (0, 1]", ratio));

  const auto all = ds.ratings();
  std::vector<bool> in_train(all.size(), false);
  Rng rng(mix_seed(seed, 0x7ea1));

  for (std::uint32_t u = 0; u < ds.num_users(); ++u) {
    const auto profile = ds.user_ratings(u);
    if (profile.empty())
      throw std::invalid_argument(
          fmt::format("user {} has no ratings; cannot split", ds.user(u).id));
    const std::size_t n = profile.size();
    const auto n_train =
        static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
    if (n_train == n) {
      for (const auto& e : profile) in_train[e.rating] = true;
      continue;
    }
    std::vector<std::uint32_t> idx;
    idx.reserve(n);
    for (const auto& e : profile) idx.push_back(e.rating);
    rng.shuffle(idx);
    for (std::size_t j = 0; j < n_train; ++j) in_train[idx[j]] = true;
  }

  DatasetBuilder train_b, test_b;
  std::vector<double> domain(ds.rating_values().begin(), ds.rating_values().end());
  train_b.set_rating_values(domain);
  test_b.set_rating_values(domain);
  for (const auto& u : ds.users()) {
    train_b.add_user(u.id, u.gender);
    test_b.add_user(u.id, u.gender);
  }
  for (const auto& it : ds.items()) {
    train_b.add_item(it.id, it.genres);
    test_b.add_item(it.id, it.genres);
  }
  for (std::size_t r = 0; r < all.size(); ++r) {
    auto& b = in_train[r] ? train_b : test_b;
    b.add_rating(all[r].user, all[r].item, all[r].value, all[r].timestamp);
  }

  return SplitPair{train_b.build(), test_b.build(), seed, ratio};
}

}  // namespace recfair
