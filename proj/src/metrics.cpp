#include "recfair/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace recfair {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::uint32_t require_user(const RatingDataset& ds, UserId u) {
  auto idx = ds.user_index(u);
  if (!idx) throw std::invalid_argument(fmt::format("unknown user {}", u));
  return *idx;
}

void check_distribution(const GenreDistribution& d, const char* name) {
  double total = 0.0;
  for (const auto& [genre, prob] : d) {
    if (prob < 0.0)
      throw std::invalid_argument(
          fmt::format("{} has a negative probability for genre '{}'", name, genre));
    total += prob;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument(fmt::format("{} probabilities sum to {}, not 1", name, total));
}

}  // namespace

const char* factor_tag(Factor f) {
  switch (f) {
    case Factor::Anomaly: return "anomaly";
    case Factor::Entropy: return "entropy";
    case Factor::Size: return "size";
  }
  return "?";
}

const char* outcome_tag(Outcome m) {
  return m == Outcome::Precision ? "precision" : "miscalibration";
}

std::optional<Factor> factor_from_tag(std::string_view tag) {
  if (tag == "anomaly") return Factor::Anomaly;
  if (tag == "entropy") return Factor::Entropy;
  if (tag == "size") return Factor::Size;
  return std::nullopt;
}

std::optional<Outcome> outcome_from_tag(std::string_view tag) {
  if (tag == "precision") return Outcome::Precision;
  if (tag == "miscalibration") return Outcome::Miscalibration;
  return std::nullopt;
}

double UserFactors::factor(Factor f) const {
  switch (f) {
    case Factor::Anomaly: return anomaly;
    case Factor::Entropy: return entropy;
    case Factor::Size: return static_cast<double>(size);
  }
  return kNan;
}

std::vector<double> item_mean_ratings(const RatingDataset& ds) {
  std::vector<double> means(ds.num_items(), kNan);
  for (std::uint32_t i = 0; i < ds.num_items(); ++i) {
    const auto entries = ds.item_ratings(i);
    if (entries.empty()) continue;
    double sum = 0.0;
    for (const auto& e : entries) sum += e.value;
    means[i] = sum / static_cast<double>(entries.size());
  }
  return means;
}

double profile_anomaly(const RatingDataset& ds, std::uint32_t user_idx,
                       std::span<const double> item_means) {
  const auto profile = ds.user_ratings(user_idx);
  if (profile.empty())
    throw std::invalid_argument(
        fmt::format("user {} has an empty profile", ds.user(user_idx).id));
  double sum = 0.0;
  std::size_t covered = 0;
  for (const auto& e : profile) {
    const double mean = item_means[e.index];
    if (std::isnan(mean)) continue;  // item unseen in the mean basis
    sum += std::abs(e.value - mean);
    ++covered;
  }
  if (covered == 0) return kNan;
  return sum / static_cast<double>(covered);
}

double profile_anomaly(const RatingDataset& ds, UserId u) {
  return profile_anomaly(ds, require_user(ds, u), item_mean_ratings(ds));
}

double profile_entropy(const RatingDataset& ds, UserId u) {
  const auto profile = ds.user_ratings(require_user(ds, u));
  if (profile.empty()) throw std::invalid_argument(fmt::format("user {} has an empty profile", u));
  const auto domain = ds.rating_values();
  std::vector<std::size_t> counts(domain.size(), 0);
  for (const auto& e : profile) {
    auto it = std::lower_bound(domain.begin(), domain.end(), e.value);
    counts[static_cast<std::size_t>(it - domain.begin())]++;
  }
  const auto n = static_cast<double>(profile.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

std::size_t profile_size(const RatingDataset& ds, UserId u) {
  return ds.user_ratings(require_user(ds, u)).size();
}

std::vector<UserFactors> compute_user_factors(const RatingDataset& ds,
                                              const RatingDataset& mean_basis) {
  // Means indexed by the basis dataset's item order; map through item ids.
  const auto basis_means = item_mean_ratings(mean_basis);
  std::vector<double> means(ds.num_items(), kNan);
  for (std::uint32_t i = 0; i < ds.num_items(); ++i) {
    if (auto bi = mean_basis.item_index(ds.item(i).id)) means[i] = basis_means[*bi];
  }

  const auto domain = ds.rating_values();
  std::vector<UserFactors> out;
  out.reserve(ds.num_users());
  std::vector<std::size_t> counts(domain.size());
  for (std::uint32_t u = 0; u < ds.num_users(); ++u) {
    const auto profile = ds.user_ratings(u);
    if (profile.empty()) continue;

    double dev_sum = 0.0;
    std::size_t covered = 0;
    std::fill(counts.begin(), counts.end(), 0);
    for (const auto& e : profile) {
      if (!std::isnan(means[e.index])) {
        dev_sum += std::abs(e.value - means[e.index]);
        ++covered;
      }
      auto it = std::lower_bound(domain.begin(), domain.end(), e.value);
      counts[static_cast<std::size_t>(it - domain.begin())]++;
    }
    const auto n = static_cast<double>(profile.size());
    double h = 0.0;
    for (std::size_t c : counts) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
    out.push_back({ds.user(u).id,
                   covered > 0 ? dev_sum / static_cast<double>(covered) : kNan, h,
                   static_cast<int>(profile.size())});
  }
  return out;
}

std::vector<UserFactors> compute_user_factors(const RatingDataset& ds) {
  return compute_user_factors(ds, ds);
}

double precision_at_k(const RecommendationList& rec,
                      const std::unordered_set<ItemId>& test_items, int k) {
  if (k < 1) throw std::invalid_argument(fmt::format("k must be >= 1, got {}", k));
  std::size_t hits = 0;
  std::size_t considered = 0;
  for (const auto& e : rec.entries) {
    if (considered == static_cast<std::size_t>(k)) break;
    ++considered;
    if (test_items.contains(e.item)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

GenreDistribution genre_distribution(std::span<const std::pair<ItemId, double>> items,
                                     const RatingDataset& ds) {
  if (items.empty()) throw std::invalid_argument("genre_distribution: empty item list");
  GenreDistribution dist;
  double total = 0.0;
  for (const auto& [id, weight] : items) {
    auto idx = ds.item_index(id);
    if (!idx) throw std::invalid_argument(fmt::format("unknown item {}", id));
    const auto& genres = ds.item(*idx).genres;
    const double share = weight / static_cast<double>(genres.size());
    for (const auto& g : genres) dist[g] += share;
    total += weight;
  }
  if (total <= 0.0) throw std::invalid_argument("genre_distribution: total weight is zero");
  for (auto& [genre, mass] : dist) mass /= total;
  return dist;
}

double miscalibration(std::span<const double> p, std::span<const double> q, double alpha) {
  if (p.size() != q.size())
    throw std::invalid_argument(
        fmt::format("mismatched genre universes ({} vs {} entries)", p.size(), q.size()));
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument(fmt::format("alpha {} outside (0, 1)", alpha));
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    const double qs = (1.0 - alpha) * q[i] + alpha * p[i];
    kl += p[i] * std::log(p[i] / qs);
  }
  return kl;
}

double miscalibration(const GenreDistribution& p, const GenreDistribution& q, double alpha) {
  check_distribution(p, "p");
  check_distribution(q, "q");
  // Align over the union of both key sets; absent genres have probability 0.
  std::vector<double> pv, qv;
  auto ip = p.begin();
  auto iq = q.begin();
  while (ip != p.end() || iq != q.end()) {
    if (iq == q.end() || (ip != p.end() && ip->first < iq->first)) {
      pv.push_back(ip->second);
      qv.push_back(0.0);
      ++ip;
    } else if (ip == p.end() || iq->first < ip->first) {
      pv.push_back(0.0);
      qv.push_back(iq->second);
      ++iq;
    } else {
      pv.push_back(ip->second);
      qv.push_back(iq->second);
      ++ip;
      ++iq;
    }
  }
  return miscalibration(pv, qv, alpha);
}

std::optional<double> pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument(
        fmt::format("pearson_correlation: length mismatch ({} vs {})", x.size(), y.size()));
  if (x.size() < 2)
    throw std::invalid_argument("pearson_correlation needs at least two points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<GenderStats> gender_stats(const RatingDataset& ds) {
  std::vector<GenderStats> out{{Gender::Male}, {Gender::Female}};
  const auto factors = compute_user_factors(ds);
  std::vector<std::size_t> n(kNumGenders, 0);
  for (const auto& f : factors) {
    const auto idx = ds.user_index(f.user);
    const auto g = static_cast<std::size_t>(ds.user(*idx).gender);
    out[g].mean_anomaly += f.anomaly;
    out[g].mean_entropy += f.entropy;
    out[g].mean_size += static_cast<double>(f.size);
    ++n[g];
  }
  for (std::size_t g = 0; g < kNumGenders; ++g) {
    out[g].users = ds.user_count(out[g].gender);
    out[g].ratings = ds.rating_count(out[g].gender);
    if (n[g] > 0) {
      out[g].mean_anomaly /= static_cast<double>(n[g]);
      out[g].mean_entropy /= static_cast<double>(n[g]);
      out[g].mean_size /= static_cast<double>(n[g]);
    }
  }
  return out;
}

}  // namespace recfair
