#include "recfair/itemknn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace recfair {

namespace {

struct RatedNeighbor {
  double sim;
  std::uint32_t item;
  double rating;
};

// Higher similarity first, then lower item index (== lower item id).
bool neighbor_better(const RatedNeighbor& a, const RatedNeighbor& b) {
  if (a.sim != b.sim) return a.sim > b.sim;
  return a.item < b.item;
}

bool worst_on_top(const RatedNeighbor& a, const RatedNeighbor& b) {
  return neighbor_better(a, b);
}

// Keeps the best `cap` entries in seg[0..len); the heap top is the worst.
void bounded_push(RatedNeighbor* seg, std::uint32_t& len, std::uint32_t cap,
                  const RatedNeighbor& e) {
  if (len < cap) {
    seg[len++] = e;
    std::push_heap(seg, seg + len, worst_on_top);
  } else if (neighbor_better(e, seg[0])) {
    std::pop_heap(seg, seg + len, worst_on_top);
    seg[len - 1] = e;
    std::push_heap(seg, seg + len, worst_on_top);
  }
}

double weighted_average(RatedNeighbor* seg, std::uint32_t len) {
  // Ascending item order fixes the accumulation order.
  std::sort(seg, seg + len,
            [](const RatedNeighbor& a, const RatedNeighbor& b) { return a.item < b.item; });
  double num = 0.0, den = 0.0;
  for (std::uint32_t k = 0; k < len; ++k) {
    num += seg[k].sim * seg[k].rating;
    den += seg[k].sim;
  }
  return num / den;
}

}  // namespace

ItemKnnModel::ItemKnnModel(const RatingDataset& train, HyperParams hp, std::uint64_t seed)
    : RecommenderModel(Algorithm::ItemKnn, train, std::move(hp), seed) {}

void ItemKnnModel::fit() {
  const std::size_t num_users = train_->num_users();
  num_items_ = train_->num_items();

  user_means_.assign(num_users, 0.0);
  for (std::uint32_t u = 0; u < num_users; ++u) {
    auto profile = train_->user_ratings(u);
    if (profile.empty()) continue;
    double sum = 0.0;
    for (const auto& e : profile) sum += e.value;
    user_means_[u] = sum / profile.size();
  }

  sim_.assign(num_items_ * num_items_, 0.0);
  std::vector<double> dot(num_items_, 0.0), na(num_items_, 0.0), nb(num_items_, 0.0);
  std::vector<std::uint32_t> cnt(num_items_, 0);
  std::vector<std::uint32_t> touched;
  touched.reserve(num_items_);

  for (std::uint32_t i = 0; i < num_items_; ++i) {
    double self = 0.0;
    for (const auto& f : train_->item_ratings(i)) {
      const std::uint32_t u = f.index;
      const double dev_i = f.value - user_means_[u];
      self += dev_i * dev_i;
      for (const auto& e : train_->user_ratings(u)) {
        const std::uint32_t j = e.index;
        if (j == i) continue;
        if (cnt[j] == 0) touched.push_back(j);
        const double dev_j = e.value - user_means_[u];
        dot[j] += dev_i * dev_j;
        na[j] += dev_i * dev_i;
        nb[j] += dev_j * dev_j;
        ++cnt[j];
      }
    }
    double* row = sim_.data() + std::size_t(i) * num_items_;
    for (std::uint32_t j : touched) {
      // As with the user model, fewer than 2 co-raters yields similarity 0.
      if (cnt[j] >= 2 && na[j] > 0.0 && nb[j] > 0.0) {
        double s = std::clamp(dot[j] / std::sqrt(na[j] * nb[j]), -1.0, 1.0);
        if (hp_.shrinkage > 0.0) s *= cnt[j] / (cnt[j] + hp_.shrinkage);
        row[j] = s;
      }
      dot[j] = na[j] = nb[j] = 0.0;
      cnt[j] = 0;
    }
    touched.clear();
    row[i] = self > 0.0 ? 1.0 : 0.0;
  }
}

double ItemKnnModel::similarity(ItemId a, ItemId b) const {
  auto ia = train_->item_index(a);
  auto ib = train_->item_index(b);
  if (!ia || !ib)
    throw std::invalid_argument(fmt::format("item {} not in training set", !ia ? a : b));
  return sim_row(*ia)[*ib];
}

std::optional<double> ItemKnnModel::predict_indexed(std::uint32_t u, std::uint32_t i) const {
  auto profile = train_->user_ratings(u);
  if (profile.empty()) return std::nullopt;
  const std::uint32_t cap =
      std::min<std::uint32_t>(static_cast<std::uint32_t>(hp_.neighbors),
                              static_cast<std::uint32_t>(profile.size()));
  std::vector<RatedNeighbor> heap(cap);
  std::uint32_t len = 0;
  const double* row = sim_row(i);
  for (const auto& e : profile) {
    if (e.index == i) continue;  // never score an item against itself
    const double s = row[e.index];
    if (s <= 0.0) continue;
    bounded_push(heap.data(), len, cap, {s, e.index, e.value});
  }
  if (len == 0) return std::nullopt;
  return weighted_average(heap.data(), len);
}

void ItemKnnModel::score_candidates(std::uint32_t u, std::span<const char> candidate,
                                    std::span<double> out) const {
  auto profile = train_->user_ratings(u);
  if (profile.empty()) return;
  const std::uint32_t cap =
      std::min<std::uint32_t>(static_cast<std::uint32_t>(hp_.neighbors),
                              static_cast<std::uint32_t>(profile.size()));
  std::vector<RatedNeighbor> heaps(num_items_ * std::size_t(cap));
  std::vector<std::uint32_t> lens(num_items_, 0);

  // Sweep similarity rows of the rated items (sequential reads) instead of
  // gathering per candidate; pushes still arrive in ascending rated-item
  // order, matching predict_indexed().
  for (const auto& e : profile) {
    const double* row = sim_row(e.index);
    for (std::uint32_t i = 0; i < num_items_; ++i) {
      if (!candidate[i]) continue;
      const double s = row[i];
      if (s <= 0.0) continue;
      bounded_push(heaps.data() + std::size_t(i) * cap, lens[i], cap, {s, e.index, e.value});
    }
  }
  for (std::uint32_t i = 0; i < num_items_; ++i) {
    if (lens[i] == 0) continue;
    out[i] = weighted_average(heaps.data() + std::size_t(i) * cap, lens[i]);
  }
}

}  // namespace recfair
