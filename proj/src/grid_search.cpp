#include "recfair/grid_search.hpp"

#include <atomic>
#include <future>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>

#include "recfair/errors.hpp"
#include "recfair/metrics.hpp"

namespace recfair {

namespace {

double mean_validation_precision(const RecommenderModel& model, const RatingDataset& validation,
                                 int k) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::uint32_t u = 0; u < validation.num_users(); ++u) {
    auto profile = validation.user_ratings(u);
    if (profile.empty()) continue;
    std::unordered_set<ItemId> relevant;
    relevant.reserve(profile.size());
    for (const auto& e : profile) relevant.insert(validation.item(e.index).id);
    const RecommendationList rec = model.recommend(validation.user(u).id, k);
    sum += precision_at_k(rec, relevant, k);
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / counted;
}

}  // namespace

std::vector<HyperParams> expand_grid(Algorithm a, const HyperParamGrid& grid) {
  std::vector<HyperParams> out;
  switch (a) {
    case Algorithm::UserKnn:
    case Algorithm::ItemKnn:
      if (grid.neighbors.empty() || grid.shrinkage.empty())
        throw ConfigError(fmt::format("{}: empty hyperparameter grid", algorithm_tag(a)));
      for (int n : grid.neighbors)
        for (double s : grid.shrinkage) {
          HyperParams hp;
          hp.neighbors = n;
          hp.shrinkage = s;
          out.push_back(hp);
        }
      break;
    case Algorithm::SvdPlusPlus:
    case Algorithm::ListRankMf:
      if (grid.factors.empty() || grid.learning_rate.empty() || grid.l2.empty() ||
          grid.epochs.empty())
        throw ConfigError(fmt::format("{}: empty hyperparameter grid", algorithm_tag(a)));
      for (int f : grid.factors)
        for (double lr : grid.learning_rate)
          for (double l2 : grid.l2)
            for (int ep : grid.epochs) {
              HyperParams hp;
              hp.factors = f;
              hp.learning_rate = lr;
              hp.l2 = l2;
              hp.epochs = ep;
              out.push_back(hp);
            }
      break;
  }
  for (const HyperParams& hp : out) validate_hyperparams(a, hp);
  return out;
}

GridSearchResult grid_search(Algorithm a, const RatingDataset& train,
                             const RatingDataset& validation, const HyperParamGrid& grid, int k,
                             std::uint64_t seed, int max_threads) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (train.num_ratings() == 0) throw std::invalid_argument("training set has no ratings");

  bool overlap = false;
  for (std::uint32_t u = 0; u < validation.num_users(); ++u) {
    if (validation.user_ratings(u).empty()) continue;
    if (!train.user_index(validation.user(u).id))
      throw std::invalid_argument(
          fmt::format("validation user {} is not in the training set", validation.user(u).id));
    overlap = true;
  }
  if (!overlap) throw std::invalid_argument("validation set has no rated users");

  const std::vector<HyperParams> configs = expand_grid(a, grid);

  GridSearchResult result;
  result.table.resize(configs.size());
  for (std::size_t c = 0; c < configs.size(); ++c) result.table[c].hp = configs[c];

  auto evaluate_config = [&](std::size_t c) {
    GridEntry& entry = result.table[c];
    try {
      auto model = fit_model(a, train, entry.hp, seed);
      entry.precision = mean_validation_precision(*model, validation, k);
    } catch (const TrainingDivergence& e) {
      entry.error = e.what();
    }
  };

  const int workers =
      std::max(1, std::min<int>(max_threads, static_cast<int>(configs.size())));
  if (workers <= 1) {
    for (std::size_t c = 0; c < configs.size(); ++c) evaluate_config(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> tasks;
    tasks.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      tasks.push_back(std::async(std::launch::async, [&] {
        for (std::size_t c = next.fetch_add(1); c < configs.size(); c = next.fetch_add(1))
          evaluate_config(c);
      }));
    for (auto& t : tasks) t.get();
  }

  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < result.table.size(); ++c) {
    const auto& entry = result.table[c];
    if (!entry.precision) continue;
    if (!best || *entry.precision > *result.table[*best].precision) best = c;
  }
  if (!best)
    throw TrainingDivergence(-1, fmt::format("{}: every grid configuration failed to train",
                                             algorithm_tag(a)));
  result.best_index = *best;
  result.best = result.table[*best].hp;
  result.best_precision = *result.table[*best].precision;
  return result;
}

}  // namespace recfair
