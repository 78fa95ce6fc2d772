#include "recfair/audit.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>
#include "json.hpp"

#include "recfair/errors.hpp"
#include "recfair/textio.hpp"
#include "recfair/version.hpp"

namespace recfair {

std::vector<std::vector<UserId>> bucket_users(
    std::span<const std::pair<UserId, double>> population, int num_buckets) {
  if (num_buckets < 2) throw std::invalid_argument("bucket count must be >= 2");
  if (population.size() < static_cast<std::size_t>(num_buckets))
    throw std::invalid_argument(fmt::format("population of {} is smaller than {} buckets",
                                            population.size(), num_buckets));

  std::vector<std::pair<UserId, double>> sorted(population.begin(), population.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });

  const std::size_t n = sorted.size();
  const std::size_t b = static_cast<std::size_t>(num_buckets);
  const std::size_t small = n / b;
  const std::size_t big_buckets = n % b;

  std::vector<std::vector<UserId>> buckets(b);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t size = small + (i < big_buckets ? 1 : 0);
    buckets[i].reserve(size);
    for (std::size_t j = 0; j < size; ++j) buckets[i].push_back(sorted[pos++].first);
  }
  return buckets;
}

std::vector<GroupRow> group_aggregate(const std::vector<std::vector<UserId>>& buckets,
                                      const std::unordered_map<UserId, double>& factors,
                                      const std::unordered_map<UserId, double>& outcomes) {
  std::vector<GroupRow> rows;
  rows.reserve(buckets.size());
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    GroupRow row;
    row.bucket = static_cast<int>(i);
    double factor_sum = 0.0, outcome_sum = 0.0;
    for (UserId u : buckets[i]) {
      auto fit = factors.find(u);
      if (fit == factors.end())
        throw std::invalid_argument(fmt::format("bucketed user {} has no factor value", u));
      auto oit = outcomes.find(u);
      if (oit == outcomes.end()) continue;  // excluded upstream; drop here too
      factor_sum += fit->second;
      outcome_sum += oit->second;
      ++row.user_count;
    }
    if (row.user_count > 0) {
      row.mean_factor = factor_sum / row.user_count;
      row.mean_outcome = outcome_sum / row.user_count;
    } else {
      row.mean_factor = std::numeric_limits<double>::quiet_NaN();
      row.mean_outcome = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

std::optional<double> report_correlation(std::span<const GroupRow> rows) {
  std::vector<double> x, y;
  x.reserve(rows.size());
  y.reserve(rows.size());
  for (const GroupRow& r : rows) {
    if (r.user_count <= 0) continue;
    x.push_back(r.mean_factor);
    y.push_back(r.mean_outcome);
  }
  if (x.size() < 2) return std::nullopt;
  return pearson_correlation(x, y);
}

std::vector<OutcomeMetrics> compute_outcomes(const SplitPair& split,
                                             const RecommenderModel& model, int k, double alpha,
                                             std::optional<double> min_test_rating) {
  if (model.train_fingerprint() != split.train.fingerprint())
    throw std::invalid_argument("model was not trained on this split's training set");
  if (k < 1) throw std::invalid_argument("k must be >= 1");

  std::vector<OutcomeMetrics> out;
  std::vector<std::pair<ItemId, double>> list_items;
  for (std::uint32_t u = 0; u < split.test.num_users(); ++u) {
    auto test_profile = split.test.user_ratings(u);
    if (test_profile.empty()) continue;

    const UserId uid = split.test.user(u).id;
    const RecommendationList rec = model.recommend(uid, k);

    std::unordered_set<ItemId> relevant;
    relevant.reserve(test_profile.size());
    for (const auto& e : test_profile) {
      if (min_test_rating && e.value < *min_test_rating) continue;
      relevant.insert(split.test.item(e.index).id);
    }

    OutcomeMetrics metrics;
    metrics.user = uid;
    metrics.precision = precision_at_k(rec, relevant, k);

    auto train_idx = split.train.user_index(uid);
    auto train_profile = split.train.user_ratings(*train_idx);
    if (!rec.entries.empty() && !train_profile.empty()) {
      list_items.clear();
      for (const auto& e : train_profile)
        list_items.emplace_back(split.train.item(e.index).id, 1.0);
      GenreDistribution p = genre_distribution(list_items, split.train);
      list_items.clear();
      for (const auto& e : rec.entries) list_items.emplace_back(e.item, 1.0);
      GenreDistribution q = genre_distribution(list_items, split.train);
      metrics.miscalibration = miscalibration(p, q, alpha);
    }
    out.push_back(metrics);
  }
  return out;
}

GroupReport audit_report(std::span<const UserFactors> factors,
                         std::span<const OutcomeMetrics> outcomes, const RatingDataset& ds,
                         const BucketSpec& spec, Outcome metric) {
  std::unordered_map<UserId, double> factor_map;
  factor_map.reserve(factors.size());
  for (const UserFactors& f : factors) factor_map.emplace(f.user, f.factor(spec.factor));

  std::unordered_map<UserId, double> outcome_map;
  outcome_map.reserve(outcomes.size());
  for (const OutcomeMetrics& o : outcomes) {
    switch (metric) {
      case Outcome::Precision:
        outcome_map.emplace(o.user, o.precision);
        break;
      case Outcome::Miscalibration:
        if (o.miscalibration) outcome_map.emplace(o.user, *o.miscalibration);
        break;
    }
  }

  // Only users with both values are bucketed, so every row stays populated.
  std::vector<std::pair<UserId, double>> population;
  for (const UserRecord& u : ds.users()) {
    if (u.gender != spec.gender) continue;
    auto fit = factor_map.find(u.id);
    if (fit == factor_map.end()) continue;
    if (!outcome_map.contains(u.id)) continue;
    population.emplace_back(u.id, fit->second);
  }

  GroupReport report;
  report.spec = spec;
  report.metric = metric;
  report.rows = group_aggregate(bucket_users(population, spec.num_buckets), factor_map,
                                outcome_map);
  report.correlation = report_correlation(report.rows);
  return report;
}

GroupReport audit_report(const RatingDataset& full, const SplitPair& split,
                         const RecommenderModel& model, const BucketSpec& spec, Outcome metric,
                         int k, double alpha, std::optional<double> min_test_rating) {
  const std::vector<UserFactors> factors = compute_user_factors(full);
  const std::vector<OutcomeMetrics> outcomes =
      compute_outcomes(split, model, k, alpha, min_test_rating);
  return audit_report(factors, outcomes, full, spec, metric);
}

void write_report_csv(const std::string& path, const GroupReport& report) {
  std::string csv = "bucket,mean_factor,mean_outcome,user_count\n";
  for (const GroupRow& r : report.rows)
    csv += fmt::format("{},{},{},{}\n", r.bucket, format_double(r.mean_factor),
                       format_double(r.mean_outcome), r.user_count);
  write_text_file(path, csv);
}

void write_report_sidecar(const std::string& path, const GroupReport& report,
                          std::string_view algorithm, std::uint64_t seed) {
  nlohmann::json j;
  j["factor"] = factor_tag(report.spec.factor);
  j["num_buckets"] = report.spec.num_buckets;
  j["gender"] = gender_name(report.spec.gender);
  j["metric"] = outcome_tag(report.metric);
  if (report.correlation)
    j["correlation"] = *report.correlation;
  else
    j["correlation"] = nullptr;
  j["algorithm"] = std::string(algorithm);
  j["seed"] = seed;
  j["tool_version"] = kToolVersion;
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<GroupRow> read_report_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  std::vector<GroupRow> rows;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "bucket,mean_factor,mean_outcome,user_count")
        throw DataError(fmt::format("{}:1: unexpected report header", path));
      continue;
    }
    GroupRow row;
    std::array<std::string_view, 4> fields;
    std::size_t field = 0, start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (field >= fields.size())
          throw DataError(fmt::format("{}:{}: too many fields", path, line_no));
        fields[field++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (field != 4) throw DataError(fmt::format("{}:{}: expected 4 fields", path, line_no));
    auto parse = [&](std::string_view s, auto& value) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
      if (ec != std::errc{} || p != s.data() + s.size())
        throw DataError(fmt::format("{}:{}: malformed number '{}'", path, line_no, s));
    };
    parse(fields[0], row.bucket);
    parse(fields[1], row.mean_factor);
    parse(fields[2], row.mean_outcome);
    parse(fields[3], row.user_count);
    rows.push_back(row);
  }
  return rows;
}

ReportMeta read_report_sidecar(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: invalid report sidecar: {}", path, e.what()));
  }
  try {
    ReportMeta meta;
    auto factor = factor_from_tag(j.at("factor").get<std::string>());
    if (!factor) throw DataError(fmt::format("{}: unknown factor tag", path));
    meta.spec.factor = *factor;
    meta.spec.num_buckets = j.at("num_buckets").get<int>();
    const auto gender = j.at("gender").get<std::string>();
    if (gender == "male")
      meta.spec.gender = Gender::Male;
    else if (gender == "female")
      meta.spec.gender = Gender::Female;
    else
      throw DataError(fmt::format("{}: unknown gender tag '{}'", path, gender));
    auto metric = outcome_from_tag(j.at("metric").get<std::string>());
    if (!metric) throw DataError(fmt::format("{}: unknown metric tag", path));
    meta.metric = *metric;
    if (!j.at("correlation").is_null()) meta.correlation = j.at("correlation").get<double>();
    meta.algorithm = j.at("algorithm").get<std::string>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.tool_version = j.at("tool_version").get<std::string>();
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("{}: malformed report sidecar: {}", path, e.what()));
  }
}

}  // namespace recfair
