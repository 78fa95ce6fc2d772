#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace recfair {

using UserId = std::int64_t;
using ItemId = std::int64_t;

enum class Gender : std::uint8_t { Male = 0, Female = 1 };

inline constexpr std::size_t kNumGenders = 2;

char gender_code(Gender g);                      // 'M' / 'F'
const char* gender_name(Gender g);               // "male" / "female"
std::optional<Gender> gender_from_code(char c);

struct UserRecord {
  UserId id;
  Gender gender;
  bool operator==(const UserRecord&) const = default;
};

struct ItemRecord {
  ItemId id;
  std::vector<std::string> genres;  // non-empty, sorted, unique
  bool operator==(const ItemRecord&) const = default;
};

struct RatingRecord {
  UserId user;
  ItemId item;
  double value;            // member of the dataset's rating value domain
  std::int64_t timestamp;  // informational only
  bool operator==(const RatingRecord&) const = default;
};

/// Immutable rating dataset with gender and genre metadata.
///
/// Construction goes through DatasetBuilder, which validates the invariants:
/// unique user/item ids, every rating referencing known ids, at most one
/// rating per (user, item), and every value inside the rating value domain.
/// After construction the dataset is safely shareable across threads.
class RatingDataset {
 public:
  struct Entry {
    std::uint32_t index;   // item index in user_ratings(), user index in item_ratings()
    std::uint32_t rating;  // position in ratings()
    double value;
  };

  std::size_t num_users() const { return users_.size(); }
  std::size_t num_items() const { return items_.size(); }
  std::size_t num_ratings() const { return ratings_.size(); }
  /// Items with at least one rating.
  std::size_t num_rated_items() const { return rated_items_; }

  std::span<const UserRecord> users() const { return users_; }
  std::span<const ItemRecord> items() const { return items_; }
  /// Sorted by (user id, item id).
  std::span<const RatingRecord> ratings() const { return ratings_; }
  /// Permitted rating values, ascending.
  std::span<const double> rating_values() const { return domain_; }

  std::optional<std::uint32_t> user_index(UserId id) const;
  std::optional<std::uint32_t> item_index(ItemId id) const;
  const UserRecord& user(std::uint32_t idx) const { return users_[idx]; }
  const ItemRecord& item(std::uint32_t idx) const { return items_[idx]; }

  /// Ratings of one user, ascending by item id.
  std::span<const Entry> user_ratings(std::uint32_t user_idx) const;
  /// Ratings of one item, ascending by user id.
  std::span<const Entry> item_ratings(std::uint32_t item_idx) const;

  std::size_t user_count(Gender g) const { return users_by_gender_[static_cast<std::size_t>(g)]; }
  std::size_t rating_count(Gender g) const { return ratings_by_gender_[static_cast<std::size_t>(g)]; }

  double mean_rating() const;  // over all ratings; 0 for an empty dataset

  /// FNV-1a hash over users, items, ratings and the value domain.
  std::uint64_t fingerprint() const { return fingerprint_; }

  bool operator==(const RatingDataset& other) const;

 private:
  friend class DatasetBuilder;
  RatingDataset() = default;

  std::vector<UserRecord> users_;
  std::vector<ItemRecord> items_;
  std::vector<RatingRecord> ratings_;
  std::vector<double> domain_;
  std::unordered_map<UserId, std::uint32_t> user_index_;
  std::unordered_map<ItemId, std::uint32_t> item_index_;
  std::vector<Entry> by_user_;
  std::vector<std::uint32_t> user_begin_;  // size num_users()+1
  std::vector<Entry> by_item_;
  std::vector<std::uint32_t> item_begin_;  // size num_items()+1
  std::size_t rated_items_ = 0;
  std::size_t users_by_gender_[kNumGenders] = {0, 0};
  std::size_t ratings_by_gender_[kNumGenders] = {0, 0};
  double rating_sum_ = 0.0;
  std::uint64_t fingerprint_ = 0;
};

class DatasetBuilder {
 public:
  DatasetBuilder& set_rating_values(std::vector<double> domain);
  DatasetBuilder& add_user(UserId id, Gender gender);
  DatasetBuilder& add_item(ItemId id, std::vector<std::string> genres);
  DatasetBuilder& add_rating(UserId user, ItemId item, double value, std::int64_t timestamp);

  /// Validates and assembles the dataset; throws DataError on any invariant
  /// violation. The builder is left empty.
  RatingDataset build();

 private:
  std::vector<UserRecord> users_;
  std::vector<ItemRecord> items_;
  std::vector<RatingRecord> ratings_;
  std::vector<double> domain_{1, 2, 3, 4, 5};
};

/// Loads the MovieLens-1M `::`-separated file triple.
/// Rating value domain is fixed to {1,2,3,4,5}.
RatingDataset load_ml1m(const std::string& ratings_path, const std::string& users_path,
                        const std::string& movies_path);

/// Canonical serialization: users.csv, items.csv, ratings.csv, domain.csv
/// (one CSV per record type, header row, UTF-8, LF). Round-trips exactly.
void save_canonical(const RatingDataset& ds, const std::string& dir);
RatingDataset load_canonical(const std::string& dir);

}  // namespace recfair
