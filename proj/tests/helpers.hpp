#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "recfair/dataset.hpp"

namespace recfair::testing {

/// Self-deleting scratch directory under the system temp root.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("recfair-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& rel = "") const {
    return rel.empty() ? path_.string() : (path_ / rel).string();
  }

 private:
  std::filesystem::path path_;
};

/// Root of the checked-in test fixtures (env override for odd build layouts).
inline std::filesystem::path fixture_dir() {
  if (const char* env = std::getenv("RECFAIR_FIXTURES")) return env;
  return std::filesystem::path(__FILE__).parent_path().parent_path() / "data" / "fixtures";
}

/// Three users, three items; u1 and u2 agree perfectly on {a, b}, u3 is flat.
/// predict(1, 30) has the known closed form 3 + (5 - 11/3) = 13/3.
inline RatingDataset toy_knn_dataset() {
  DatasetBuilder b;
  b.add_user(1, Gender::Male).add_user(2, Gender::Female).add_user(3, Gender::Male);
  b.add_item(10, {"Drama"}).add_item(20, {"Comedy"}).add_item(30, {"Drama", "Comedy"});
  b.add_rating(1, 10, 4, 1).add_rating(1, 20, 2, 2);
  b.add_rating(2, 10, 4, 3).add_rating(2, 20, 2, 4).add_rating(2, 30, 5, 5);
  b.add_rating(3, 10, 3, 6).add_rating(3, 20, 3, 7);
  return b.build();
}

}  // namespace recfair::testing
