#include "recfair/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstring>

#include "recfair/errors.hpp"

namespace recfair {

char gender_code(Gender g) { return g == Gender::Male ? 'M' : 'F'; }

const char* gender_name(Gender g) { return g == Gender::Male ? "male" : "female"; }

std::optional<Gender> gender_from_code(char c) {
  if (c == 'M') return Gender::Male;
  if (c == 'F') return Gender::Female;
  return std::nullopt;
}

std::optional<std::uint32_t> RatingDataset::user_index(UserId id) const {
  auto it = user_index_.find(id);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> RatingDataset::item_index(ItemId id) const {
  auto it = item_index_.find(id);
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

std::span<const RatingDataset::Entry> RatingDataset::user_ratings(std::uint32_t user_idx) const {
  return {by_user_.data() + user_begin_[user_idx],
          by_user_.data() + user_begin_[user_idx + 1]};
}

std::span<const RatingDataset::Entry> RatingDataset::item_ratings(std::uint32_t item_idx) const {
  return {by_item_.data() + item_begin_[item_idx],
          by_item_.data() + item_begin_[item_idx + 1]};
}

double RatingDataset::mean_rating() const {
  return ratings_.empty() ? 0.0 : rating_sum_ / static_cast<double>(ratings_.size());
}

bool RatingDataset::operator==(const RatingDataset& other) const {
  return users_ == other.users_ && items_ == other.items_ && ratings_ == other.ratings_ &&
         domain_ == other.domain_;
}

namespace {

class Fnv1a {
 public:
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      hash_ ^= (v >> (8 * i)) & 0xff;
      hash_ *= 0x100000001b3ULL;
    }
  }
  void add(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    add(bits);
  }
  void add(const std::string& s) {
    add(static_cast<std::uint64_t>(s.size()));
    for (unsigned char c : s) {
      hash_ ^= c;
      hash_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

void check_genre_label(const std::string& g) {
  if (g.empty()) throw DataError("empty genre label");
  for (char c : g) {
    if (c == '|' || c == ',' || c == '\n' || c == '\r')
      throw DataError(fmt::format("genre label contains a reserved character: '{}'", g));
  }
}

}  // namespace

DatasetBuilder& DatasetBuilder::set_rating_values(std::vector<double> domain) {
  domain_ = std::move(domain);
  return *this;
}

DatasetBuilder& DatasetBuilder::add_user(UserId id, Gender gender) {
  users_.push_back({id, gender});
  return *this;
}

DatasetBuilder& DatasetBuilder::add_item(ItemId id, std::vector<std::string> genres) {
  items_.push_back({id, std::move(genres)});
  return *this;
}

DatasetBuilder& DatasetBuilder::add_rating(UserId user, ItemId item, double value,
                                           std::int64_t timestamp) {
  ratings_.push_back({user, item, value, timestamp});
  return *this;
}

RatingDataset DatasetBuilder::build() {
  RatingDataset ds;
  ds.users_ = std::move(users_);
  ds.items_ = std::move(items_);
  ds.ratings_ = std::move(ratings_);
  ds.domain_ = std::move(domain_);
  users_ = {};
  items_ = {};
  ratings_ = {};
  domain_ = {1, 2, 3, 4, 5};

  std::sort(ds.domain_.begin(), ds.domain_.end());
  if (ds.domain_.empty()) throw DataError("rating value domain is empty");
  if (std::adjacent_find(ds.domain_.begin(), ds.domain_.end()) != ds.domain_.end())
    throw DataError("rating value domain contains duplicates");

  std::sort(ds.users_.begin(), ds.users_.end(),
            [](const UserRecord& a, const UserRecord& b) { return a.id < b.id; });
  ds.user_index_.reserve(ds.users_.size());
  for (std::uint32_t i = 0; i < ds.users_.size(); ++i) {
    if (!ds.user_index_.emplace(ds.users_[i].id, i).second)
      throw DataError(fmt::format("duplicate user id {}", ds.users_[i].id));
    ++ds.users_by_gender_[static_cast<std::size_t>(ds.users_[i].gender)];
  }

  std::sort(ds.items_.begin(), ds.items_.end(),
            [](const ItemRecord& a, const ItemRecord& b) { return a.id < b.id; });
  ds.item_index_.reserve(ds.items_.size());
  for (std::uint32_t i = 0; i < ds.items_.size(); ++i) {
    ItemRecord& it = ds.items_[i];
    if (!ds.item_index_.emplace(it.id, i).second)
      throw DataError(fmt::format("duplicate item id {}", it.id));
    if (it.genres.empty()) throw DataError(fmt::format("item {} has no genres", it.id));
    std::sort(it.genres.begin(), it.genres.end());
    it.genres.erase(std::unique(it.genres.begin(), it.genres.end()), it.genres.end());
    for (const auto& g : it.genres) check_genre_label(g);
  }

  std::sort(ds.ratings_.begin(), ds.ratings_.end(), [](const RatingRecord& a, const RatingRecord& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  for (std::size_t i = 0; i + 1 < ds.ratings_.size(); ++i) {
    if (ds.ratings_[i].user == ds.ratings_[i + 1].user &&
        ds.ratings_[i].item == ds.ratings_[i + 1].item)
      throw DataError(fmt::format("duplicate rating for user {} and item {}", ds.ratings_[i].user,
                                  ds.ratings_[i].item));
  }

  const std::size_t u_count = ds.users_.size();
  const std::size_t i_count = ds.items_.size();
  std::vector<std::uint32_t> user_sizes(u_count, 0), item_sizes(i_count, 0);
  std::vector<std::uint32_t> rat_user(ds.ratings_.size()), rat_item(ds.ratings_.size());
  for (std::size_t r = 0; r < ds.ratings_.size(); ++r) {
    const RatingRecord& rec = ds.ratings_[r];
    auto ui = ds.user_index(rec.user);
    if (!ui) throw DataError(fmt::format("rating references unknown user {}", rec.user));
    auto ii = ds.item_index(rec.item);
    if (!ii) throw DataError(fmt::format("rating references unknown item {}", rec.item));
    if (!std::binary_search(ds.domain_.begin(), ds.domain_.end(), rec.value))
      throw DataError(fmt::format("rating value {} for user {} item {} outside the value domain",
                                  rec.value, rec.user, rec.item));
    rat_user[r] = *ui;
    rat_item[r] = *ii;
    ++user_sizes[*ui];
    ++item_sizes[*ii];
    ++ds.ratings_by_gender_[static_cast<std::size_t>(ds.users_[*ui].gender)];
    ds.rating_sum_ += rec.value;
  }

  ds.user_begin_.assign(u_count + 1, 0);
  for (std::size_t u = 0; u < u_count; ++u) ds.user_begin_[u + 1] = ds.user_begin_[u] + user_sizes[u];
  ds.item_begin_.assign(i_count + 1, 0);
  for (std::size_t i = 0; i < i_count; ++i) {
    ds.item_begin_[i + 1] = ds.item_begin_[i] + item_sizes[i];
    if (item_sizes[i] > 0) ++ds.rated_items_;
  }

  ds.by_user_.resize(ds.ratings_.size());
  ds.by_item_.resize(ds.ratings_.size());
  std::vector<std::uint32_t> ucur(ds.user_begin_.begin(), ds.user_begin_.end() - 1);
  std::vector<std::uint32_t> icur(ds.item_begin_.begin(), ds.item_begin_.end() - 1);
  for (std::uint32_t r = 0; r < ds.ratings_.size(); ++r) {
    // ratings_ is (user, item)-sorted, so per-user runs are already item-ascending
    // and per-item fills happen in user-ascending order.
    ds.by_user_[ucur[rat_user[r]]++] = {rat_item[r], r, ds.ratings_[r].value};
    ds.by_item_[icur[rat_item[r]]++] = {rat_user[r], r, ds.ratings_[r].value};
  }

  Fnv1a h;
  h.add(static_cast<std::uint64_t>(ds.users_.size()));
  for (const auto& u : ds.users_) {
    h.add(static_cast<std::uint64_t>(u.id));
    h.add(static_cast<std::uint64_t>(u.gender));
  }
  h.add(static_cast<std::uint64_t>(ds.items_.size()));
  for (const auto& it : ds.items_) {
    h.add(static_cast<std::uint64_t>(it.id));
    for (const auto& g : it.genres) h.add(g);
  }
  h.add(static_cast<std::uint64_t>(ds.ratings_.size()));
  for (const auto& r : ds.ratings_) {
    h.add(static_cast<std::uint64_t>(r.user));
    h.add(static_cast<std::uint64_t>(r.item));
    h.add(r.value);
    h.add(static_cast<std::uint64_t>(r.timestamp));
  }
  for (double v : ds.domain_) h.add(v);
  ds.fingerprint_ = h.value();

  return ds;
}

}  // namespace recfair
