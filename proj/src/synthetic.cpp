#include "recfair/synthetic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "recfair/rng.hpp"

namespace recfair {

namespace {

const char* kGenrePool[] = {"Action", "Comedy", "Drama", "Horror", "Romance", "SciFi"};
constexpr std::size_t kGenrePoolSize = 6;

}  // namespace

RatingDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_users < 1 || spec.num_items < 1)
    throw std::invalid_argument("synthetic spec needs at least one user and one item");
  if (!(spec.gender_ratio >= 0.0 && spec.gender_ratio <= 1.0))
    throw std::invalid_argument("gender_ratio outside [0, 1]");
  if (spec.rating_values.empty())
    throw std::invalid_argument("synthetic spec has an empty rating value domain");
  if (spec.rating_distribution.size() != spec.rating_values.size())
    throw std::invalid_argument(
        fmt::format("rating_distribution has {} weights for {} rating values",
                    spec.rating_distribution.size(), spec.rating_values.size()));
  if (spec.min_profile < 1) throw std::invalid_argument("min_profile must be >= 1");
  int max_profile = spec.max_profile == 0 ? spec.num_items : spec.max_profile;
  max_profile = std::min(max_profile, spec.num_items);
  if (max_profile < spec.min_profile)
    throw std::invalid_argument("max_profile smaller than min_profile");

  DatasetBuilder builder;
  builder.set_rating_values(spec.rating_values);

  const auto num_male = static_cast<int>(
      std::floor(spec.gender_ratio * static_cast<double>(spec.num_users) + 0.5));
  for (int u = 1; u <= spec.num_users; ++u)
    builder.add_user(u, u <= num_male ? Gender::Male : Gender::Female);

  for (int i = 1; i <= spec.num_items; ++i) {
    std::vector<std::string> genres{kGenrePool[(i - 1) % kGenrePoolSize]};
    if (i % 3 == 0) genres.push_back(kGenrePool[(i + 1) % kGenrePoolSize]);
    builder.add_item(i, std::move(genres));
  }

  Rng rng(mix_seed(spec.seed, 0x5f0));
  std::vector<int> item_ids(static_cast<std::size_t>(spec.num_items));
  for (int i = 0; i < spec.num_items; ++i) item_ids[static_cast<std::size_t>(i)] = i + 1;
  std::int64_t ts = 1;
  for (int u = 1; u <= spec.num_users; ++u) {
    const auto size = static_cast<std::size_t>(
        spec.min_profile + static_cast<int>(rng.bounded(
                               static_cast<std::uint64_t>(max_profile - spec.min_profile + 1))));
    rng.shuffle(item_ids);
    std::vector<int> chosen(item_ids.begin(), item_ids.begin() + static_cast<long>(size));
    std::sort(chosen.begin(), chosen.end());
    for (int item : chosen) {
      const std::size_t v = rng.weighted(spec.rating_distribution);
      builder.add_rating(u, item, spec.rating_values[v], ts++);
    }
  }

  return builder.build();
}

}  // namespace recfair
