#include "recfair/userknn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace recfair {

namespace {

// Pearson over n co-rated pairs from running sums; 0 when degenerate.
double pearson_from_sums(std::uint32_t n, double sx, double sy, double sxx, double syy,
                         double sxy, double shrinkage) {
  if (n < 2) return 0.0;
  const double num = sxy - sx * sy / n;
  const double dx = sxx - sx * sx / n;
  const double dy = syy - sy * sy / n;
  if (!(dx > 0.0) || !(dy > 0.0)) return 0.0;
  double sim = num / std::sqrt(dx * dy);
  sim = std::clamp(sim, -1.0, 1.0);
  if (shrinkage > 0.0) sim *= n / (n + shrinkage);
  return sim;
}

struct Neighbor {
  double sim;
  std::uint32_t user;
  double rating;
};

// Ordering for neighborhood selection: higher similarity first, then lower
// user index (== lower user id).
bool neighbor_better(const Neighbor& a, const Neighbor& b) {
  if (a.sim != b.sim) return a.sim > b.sim;
  return a.user < b.user;
}

// Keeps the best `cap` entries; the heap top is the worst kept entry.
void bounded_push(std::vector<Neighbor>& heap, std::size_t cap, const Neighbor& e) {
  auto worst_on_top = [](const Neighbor& a, const Neighbor& b) { return neighbor_better(a, b); };
  if (heap.size() < cap) {
    heap.push_back(e);
    std::push_heap(heap.begin(), heap.end(), worst_on_top);
  } else if (neighbor_better(e, heap.front())) {
    std::pop_heap(heap.begin(), heap.end(), worst_on_top);
    heap.back() = e;
    std::push_heap(heap.begin(), heap.end(), worst_on_top);
  }
}

}  // namespace

UserKnnModel::UserKnnModel(const RatingDataset& train, HyperParams hp, std::uint64_t seed)
    : RecommenderModel(Algorithm::UserKnn, train, std::move(hp), seed) {}

void UserKnnModel::fit() {
  const std::size_t num_users = train_->num_users();
  user_means_.assign(num_users, 0.0);
  for (std::uint32_t u = 0; u < num_users; ++u) {
    auto profile = train_->user_ratings(u);
    if (profile.empty()) continue;
    double sum = 0.0;
    for (const auto& e : profile) sum += e.value;
    user_means_[u] = sum / profile.size();
  }
}

double UserKnnModel::similarity_indexed(std::uint32_t a, std::uint32_t b) const {
  if (a == b) return 1.0;
  auto pa = train_->user_ratings(a);
  auto pb = train_->user_ratings(b);
  std::uint32_t n = 0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < pa.size() && ib < pb.size()) {
    if (pa[ia].index < pb[ib].index) {
      ++ia;
    } else if (pb[ib].index < pa[ia].index) {
      ++ib;
    } else {
      const double x = pa[ia].value, y = pb[ib].value;
      ++n;
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
      ++ia;
      ++ib;
    }
  }
  return pearson_from_sums(n, sx, sy, sxx, syy, sxy, hp_.shrinkage);
}

double UserKnnModel::similarity(UserId a, UserId b) const {
  auto ia = train_->user_index(a);
  auto ib = train_->user_index(b);
  if (!ia || !ib)
    throw std::invalid_argument(fmt::format("user {} not in training set", !ia ? a : b));
  return similarity_indexed(*ia, *ib);
}

double UserKnnModel::user_mean(UserId u) const {
  auto iu = train_->user_index(u);
  if (!iu) throw std::invalid_argument(fmt::format("user {} not in training set", u));
  return user_means_[*iu];
}

void UserKnnModel::similarity_row(std::uint32_t u, std::span<double> sims) const {
  const std::size_t num_users = train_->num_users();
  std::vector<std::uint32_t> cnt(num_users, 0);
  std::vector<double> sx(num_users, 0.0), sy(num_users, 0.0), sxx(num_users, 0.0),
      syy(num_users, 0.0), sxy(num_users, 0.0);
  std::vector<std::uint32_t> touched;

  // Accumulates co-rating sums against every other user in one sweep over
  // u's profile; per-neighbor accumulation order matches the pairwise merge
  // join, so values are bit-identical to similarity_indexed().
  for (const auto& e : train_->user_ratings(u)) {
    const double x = e.value;
    for (const auto& f : train_->item_ratings(e.index)) {
      const std::uint32_t v = f.index;
      if (v == u) continue;
      if (cnt[v] == 0) touched.push_back(v);
      ++cnt[v];
      sx[v] += x;
      sy[v] += f.value;
      sxx[v] += x * x;
      syy[v] += f.value * f.value;
      sxy[v] += x * f.value;
    }
  }
  std::fill(sims.begin(), sims.end(), 0.0);
  for (std::uint32_t v : touched)
    sims[v] = pearson_from_sums(cnt[v], sx[v], sy[v], sxx[v], syy[v], sxy[v], hp_.shrinkage);
}

std::optional<double> UserKnnModel::predict_indexed(std::uint32_t u, std::uint32_t i) const {
  const std::size_t cap =
      std::min<std::size_t>(static_cast<std::size_t>(hp_.neighbors), train_->num_users());
  std::vector<Neighbor> heap;
  heap.reserve(cap);
  for (const auto& f : train_->item_ratings(i)) {
    const std::uint32_t v = f.index;
    if (v == u) continue;
    const double s = similarity_indexed(u, v);
    if (s <= 0.0) continue;
    bounded_push(heap, cap, {s, v, f.value});
  }
  if (heap.empty()) return std::nullopt;
  std::sort(heap.begin(), heap.end(),
            [](const Neighbor& a, const Neighbor& b) { return a.user < b.user; });
  double num = 0.0, den = 0.0;
  for (const auto& nb : heap) {
    num += nb.sim * (nb.rating - user_means_[nb.user]);
    den += nb.sim;
  }
  return user_means_[u] + num / den;
}

void UserKnnModel::score_candidates(std::uint32_t u, std::span<const char> candidate,
                                    std::span<double> out) const {
  const std::size_t num_users = train_->num_users();
  const std::size_t num_items = train_->num_items();
  std::vector<double> sims(num_users, 0.0);
  similarity_row(u, sims);

  const std::size_t cap = std::min<std::size_t>(static_cast<std::size_t>(hp_.neighbors), num_users);
  std::vector<Neighbor> heap;
  heap.reserve(cap);
  for (std::uint32_t i = 0; i < num_items; ++i) {
    if (!candidate[i]) continue;
    heap.clear();
    for (const auto& f : train_->item_ratings(i)) {
      const double s = sims[f.index];
      if (s <= 0.0) continue;
      bounded_push(heap, cap, {s, f.index, f.value});
    }
    if (heap.empty()) continue;
    // Accumulate in ascending user order so results match predict_indexed().
    std::sort(heap.begin(), heap.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.user < b.user; });
    double num = 0.0, den = 0.0;
    for (const auto& nb : heap) {
      num += nb.sim * (nb.rating - user_means_[nb.user]);
      den += nb.sim;
    }
    out[i] = user_means_[u] + num / den;
  }
}

}  // namespace recfair
