#include <fmt/format.h>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string_view>

#include "recfair/dataset.hpp"
#include "recfair/errors.hpp"
#include "recfair/textio.hpp"

namespace recfair {

namespace {

namespace fs = std::filesystem;

std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

template <class T>
T parse_number(std::string_view s, const std::string& file, std::size_t line_no,
               const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError(fmt::format("{}:{}: malformed {} '{}'", file, line_no, what, s));
  return v;
}

/// Reads lines, strips trailing CR, skips blank lines, calls fn(line, line_no).
template <class Fn>
void for_each_line(const std::string& path, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open {}", path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(std::string_view(line), line_no);
  }
}

void expect_header(std::string_view got, std::string_view want, const std::string& file) {
  if (got != want)
    throw DataError(fmt::format("{}:1: expected header '{}', got '{}'", file, want, got));
}

}  // namespace

RatingDataset load_ml1m(const std::string& ratings_path, const std::string& users_path,
                        const std::string& movies_path) {
  DatasetBuilder builder;
  builder.set_rating_values({1, 2, 3, 4, 5});

  std::unordered_map<UserId, char> known_users;
  for_each_line(users_path, [&](std::string_view line, std::size_t no) {
    auto f = split(line, "::");
    if (f.size() != 5)
      throw DataError(fmt::format("{}:{}: malformed user line (expected 5 '::' fields, got {})",
                                  users_path, no, f.size()));
    UserId id = parse_number<UserId>(f[0], users_path, no, "user id");
    if (f[1].size() != 1)
      throw DataError(fmt::format("{}:{}: malformed gender '{}'", users_path, no, f[1]));
    auto g = gender_from_code(f[1][0]);
    if (!g) throw DataError(fmt::format("{}:{}: unknown gender '{}'", users_path, no, f[1]));
    if (!known_users.emplace(id, f[1][0]).second)
      throw DataError(fmt::format("{}:{}: duplicate user id {}", users_path, no, id));
    builder.add_user(id, *g);
  });

  std::unordered_map<ItemId, char> known_items;
  for_each_line(movies_path, [&](std::string_view line, std::size_t no) {
    auto f = split(line, "::");
    if (f.size() < 3)
      throw DataError(fmt::format("{}:{}: malformed movie line (expected 3 '::' fields, got {})",
                                  movies_path, no, f.size()));
    // Titles may themselves contain "::"; the genre list is always last.
    ItemId id = parse_number<ItemId>(f[0], movies_path, no, "movie id");
    std::vector<std::string> genres;
    for (auto g : split(f.back(), "|")) genres.emplace_back(g);
    if (genres.empty() || genres[0].empty())
      throw DataError(fmt::format("{}:{}: movie {} has an empty genre list", movies_path, no, id));
    if (!known_items.emplace(id, 0).second)
      throw DataError(fmt::format("{}:{}: duplicate movie id {}", movies_path, no, id));
    builder.add_item(id, std::move(genres));
  });

  for_each_line(ratings_path, [&](std::string_view line, std::size_t no) {
    auto f = split(line, "::");
    if (f.size() != 4)
      throw DataError(fmt::format("{}:{}: malformed rating line (expected 4 '::' fields, got {})",
                                  ratings_path, no, f.size()));
    UserId user = parse_number<UserId>(f[0], ratings_path, no, "user id");
    ItemId item = parse_number<ItemId>(f[1], ratings_path, no, "movie id");
    double value = parse_number<double>(f[2], ratings_path, no, "rating");
    std::int64_t ts = parse_number<std::int64_t>(f[3], ratings_path, no, "timestamp");
    if (!known_users.contains(user))
      throw DataError(fmt::format("{}:{}: rating references unknown user {}", ratings_path, no, user));
    if (!known_items.contains(item))
      throw DataError(fmt::format("{}:{}: rating references unknown movie {}", ratings_path, no, item));
    if (value < 1 || value > 5 || value != static_cast<double>(static_cast<int>(value)))
      throw DataError(fmt::format("{}:{}: rating value {} outside the 1..5 domain", ratings_path,
                                  no, f[2]));
    builder.add_rating(user, item, value, ts);
  });

  return builder.build();
}

void save_canonical(const RatingDataset& ds, const std::string& dir) {
  fs::create_directories(dir);

  std::string users = "user_id,gender\n";
  for (const auto& u : ds.users())
    users += fmt::format("{},{}\n", u.id, gender_code(u.gender));
  write_text_file((fs::path(dir) / "users.csv").string(), users);

  std::string items = "item_id,genres\n";
  for (const auto& it : ds.items())
    items += fmt::format("{},{}\n", it.id, fmt::join(it.genres, "|"));
  write_text_file((fs::path(dir) / "items.csv").string(), items);

  std::string ratings = "user_id,item_id,rating,timestamp\n";
  for (const auto& r : ds.ratings())
    ratings += fmt::format("{},{},{},{}\n", r.user, r.item, format_double(r.value), r.timestamp);
  write_text_file((fs::path(dir) / "ratings.csv").string(), ratings);

  std::string domain = "rating_value\n";
  for (double v : ds.rating_values()) domain += format_double(v) + "\n";
  write_text_file((fs::path(dir) / "domain.csv").string(), domain);
}

RatingDataset load_canonical(const std::string& dir) {
  DatasetBuilder builder;

  const std::string domain_path = (fs::path(dir) / "domain.csv").string();
  std::vector<double> domain;
  for_each_line(domain_path, [&](std::string_view line, std::size_t no) {
    if (no == 1) {
      expect_header(line, "rating_value", domain_path);
      return;
    }
    domain.push_back(parse_number<double>(line, domain_path, no, "rating value"));
  });
  builder.set_rating_values(std::move(domain));

  const std::string users_path = (fs::path(dir) / "users.csv").string();
  for_each_line(users_path, [&](std::string_view line, std::size_t no) {
    if (no == 1) {
      expect_header(line, "user_id,gender", users_path);
      return;
    }
    auto f = split(line, ",");
    if (f.size() != 2)
      throw DataError(fmt::format("{}:{}: malformed user line", users_path, no));
    UserId id = parse_number<UserId>(f[0], users_path, no, "user id");
    auto g = f[1].size() == 1 ? gender_from_code(f[1][0]) : std::nullopt;
    if (!g) throw DataError(fmt::format("{}:{}: unknown gender '{}'", users_path, no, f[1]));
    builder.add_user(id, *g);
  });

  const std::string items_path = (fs::path(dir) / "items.csv").string();
  for_each_line(items_path, [&](std::string_view line, std::size_t no) {
    if (no == 1) {
      expect_header(line, "item_id,genres", items_path);
      return;
    }
    auto f = split(line, ",");
    if (f.size() != 2)
      throw DataError(fmt::format("{}:{}: malformed item line", items_path, no));
    ItemId id = parse_number<ItemId>(f[0], items_path, no, "item id");
    std::vector<std::string> genres;
    for (auto g : split(f[1], "|")) genres.emplace_back(g);
    builder.add_item(id, std::move(genres));
  });

  const std::string ratings_path = (fs::path(dir) / "ratings.csv").string();
  for_each_line(ratings_path, [&](std::string_view line, std::size_t no) {
    if (no == 1) {
      expect_header(line, "user_id,item_id,rating,timestamp", ratings_path);
      return;
    }
    auto f = split(line, ",");
    if (f.size() != 4)
      throw DataError(fmt::format("{}:{}: malformed rating line", ratings_path, no));
    builder.add_rating(parse_number<UserId>(f[0], ratings_path, no, "user id"),
                       parse_number<ItemId>(f[1], ratings_path, no, "item id"),
                       parse_number<double>(f[2], ratings_path, no, "rating"),
                       parse_number<std::int64_t>(f[3], ratings_path, no, "timestamp"));
  });

  return builder.build();
}

}  // namespace recfair
