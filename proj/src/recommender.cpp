#include "recfair/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include "json.hpp"

#include "recfair/errors.hpp"
#include "recfair/itemknn.hpp"
#include "recfair/listrankmf.hpp"
#include "recfair/svdpp.hpp"
#include "recfair/userknn.hpp"
#include "recfair/version.hpp"

namespace recfair {

namespace {

constexpr int kCheckpointVersion = 1;

std::string fingerprint_hex(std::uint64_t fp) { return fmt::format("{:016x}", fp); }

std::unique_ptr<RecommenderModel> make_model(Algorithm a, const RatingDataset& train,
                                             const HyperParams& hp, std::uint64_t seed) {
  switch (a) {
    case Algorithm::UserKnn:
      return std::make_unique<UserKnnModel>(train, hp, seed);
    case Algorithm::ItemKnn:
      return std::make_unique<ItemKnnModel>(train, hp, seed);
    case Algorithm::SvdPlusPlus:
      return std::make_unique<SvdppModel>(train, hp, seed);
    case Algorithm::ListRankMf:
      return std::make_unique<ListRankMfModel>(train, hp, seed);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace

const char* algorithm_tag(Algorithm a) {
  switch (a) {
    case Algorithm::UserKnn:
      return "userknn";
    case Algorithm::ItemKnn:
      return "itemknn";
    case Algorithm::SvdPlusPlus:
      return "svdpp";
    case Algorithm::ListRankMf:
      return "listrankmf";
  }
  return "unknown";
}

std::optional<Algorithm> algorithm_from_tag(std::string_view tag) {
  for (Algorithm a : kAllAlgorithms) {
    if (tag == algorithm_tag(a)) return a;
  }
  return std::nullopt;
}

void validate_hyperparams(Algorithm a, const HyperParams& hp) {
  switch (a) {
    case Algorithm::UserKnn:
    case Algorithm::ItemKnn:
      if (hp.neighbors < 1)
        throw ConfigError(fmt::format("{}: neighbors must be >= 1, got {}", algorithm_tag(a),
                                      hp.neighbors));
      if (!(hp.shrinkage >= 0.0))
        throw ConfigError(fmt::format("{}: shrinkage must be >= 0, got {}", algorithm_tag(a),
                                      hp.shrinkage));
      return;
    case Algorithm::SvdPlusPlus:
    case Algorithm::ListRankMf:
      if (hp.factors < 1)
        throw ConfigError(
            fmt::format("{}: factors must be >= 1, got {}", algorithm_tag(a), hp.factors));
      if (!(hp.learning_rate > 0.0))
        throw ConfigError(fmt::format("{}: learning rate must be > 0, got {}", algorithm_tag(a),
                                      hp.learning_rate));
      if (!(hp.l2 >= 0.0))
        throw ConfigError(fmt::format("{}: l2 must be >= 0, got {}", algorithm_tag(a), hp.l2));
      if (hp.epochs < 0)
        throw ConfigError(
            fmt::format("{}: epochs must be >= 0, got {}", algorithm_tag(a), hp.epochs));
      return;
  }
  throw ConfigError("unknown algorithm");
}

std::optional<double> RecommenderModel::predict(UserId u, ItemId i) const {
  auto ui = train_->user_index(u);
  if (!ui) throw std::invalid_argument(fmt::format("user {} not in training set", u));
  auto ii = train_->item_index(i);
  if (!ii) throw std::invalid_argument(fmt::format("item {} not in training set", i));
  return predict_indexed(*ui, *ii);
}

RecommendationList RecommenderModel::recommend(UserId u, int k) const {
  if (k < 1) throw std::invalid_argument("recommendation list size must be >= 1");
  auto ui = train_->user_index(u);
  if (!ui) throw std::invalid_argument(fmt::format("user {} not in training set", u));

  const std::size_t num_items = train_->num_items();
  std::vector<char> candidate(num_items, 0);
  for (std::uint32_t i = 0; i < num_items; ++i)
    candidate[i] = train_->item_ratings(i).empty() ? 0 : 1;
  for (const auto& e : train_->user_ratings(*ui)) candidate[e.index] = 0;

  std::vector<double> scores(num_items, std::numeric_limits<double>::quiet_NaN());
  score_candidates(*ui, candidate, scores);

  std::vector<std::uint32_t> picked;
  picked.reserve(num_items);
  for (std::uint32_t i = 0; i < num_items; ++i)
    if (candidate[i] && !std::isnan(scores[i])) picked.push_back(i);

  // Item indices ascend with item ids, so index order breaks score ties.
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(k), picked.size());
  std::partial_sort(picked.begin(), picked.begin() + top, picked.end(), better);
  picked.resize(top);

  RecommendationList out;
  out.user = u;
  out.entries.reserve(top);
  for (std::uint32_t i : picked) out.entries.push_back({train_->item(i).id, scores[i]});
  return out;
}

void RecommenderModel::save(const std::string& path) const {
  nlohmann::json j;
  j["format"] = "recfair-model";
  j["format_version"] = kCheckpointVersion;
  j["tool_version"] = kToolVersion;
  j["algorithm"] = algorithm_tag(algorithm_);
  j["seed"] = seed_;
  j["train_fingerprint"] = fingerprint_hex(train_->fingerprint());
  j["hyperparameters"] = {{"neighbors", hp_.neighbors},   {"shrinkage", hp_.shrinkage},
                          {"factors", hp_.factors},       {"learning_rate", hp_.learning_rate},
                          {"l2", hp_.l2},                 {"epochs", hp_.epochs}};
  ParamBundle bundle = export_params();
  j["params"] = {{"scalars", bundle.scalars}, {"arrays", bundle.arrays}};

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open {} for writing", path));
  out << j.dump() << '\n';
  if (!out) throw DataError(fmt::format("failed writing {}", path));
}

std::unique_ptr<RecommenderModel> fit_model(Algorithm a, const RatingDataset& train,
                                            const HyperParams& hp, std::uint64_t seed) {
  if (train.num_ratings() == 0) throw DataError("training set has no ratings");
  validate_hyperparams(a, hp);
  auto model = make_model(a, train, hp, seed);
  model->fit();
  return model;
}

std::unique_ptr<RecommenderModel> load_model(const std::string& path,
                                             const RatingDataset& train) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open model checkpoint {}", path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: invalid model checkpoint: {}", path, e.what()));
  }
  try {
    if (j.at("format").get<std::string>() != "recfair-model")
      throw DataError(fmt::format("{}: not a model checkpoint", path));
    if (j.at("format_version").get<int>() != kCheckpointVersion)
      throw DataError(fmt::format("{}: unsupported checkpoint version", path));
    auto algo = algorithm_from_tag(j.at("algorithm").get<std::string>());
    if (!algo) throw DataError(fmt::format("{}: unknown algorithm tag", path));
    const auto fp = j.at("train_fingerprint").get<std::string>();
    if (fp != fingerprint_hex(train.fingerprint()))
      throw DataError(fmt::format(
          "{}: checkpoint was trained on a different dataset (fingerprint {} != {})", path, fp,
          fingerprint_hex(train.fingerprint())));

    const auto& hj = j.at("hyperparameters");
    HyperParams hp;
    hp.neighbors = hj.at("neighbors").get<int>();
    hp.shrinkage = hj.at("shrinkage").get<double>();
    hp.factors = hj.at("factors").get<int>();
    hp.learning_rate = hj.at("learning_rate").get<double>();
    hp.l2 = hj.at("l2").get<double>();
    hp.epochs = hj.at("epochs").get<int>();
    validate_hyperparams(*algo, hp);

    ParamBundle bundle;
    const auto& pj = j.at("params");
    bundle.scalars = pj.at("scalars").get<std::map<std::string, double>>();
    bundle.arrays = pj.at("arrays").get<std::map<std::string, std::vector<double>>>();

    auto model = make_model(*algo, train, hp, j.at("seed").get<std::uint64_t>());
    if (bundle.scalars.empty() && bundle.arrays.empty()) {
      model->fit();  // neighborhood models refit deterministically
    } else {
      model->import_params(bundle);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: malformed model checkpoint: {}", path, e.what()));
  }
}

}  // namespace recfair
