#include "doctest.h"

#include <filesystem>

#include "helpers.hpp"
#include "recfair/dataset.hpp"
#include "recfair/errors.hpp"
#include "recfair/textio.hpp"

using namespace recfair;
namespace fs = std::filesystem;

TEST_CASE("builder orders users, items, and ratings by id") {
  DatasetBuilder b;
  b.add_user(7, Gender::Female).add_user(2, Gender::Male).add_user(5, Gender::Male);
  b.add_item(30, {"Drama"}).add_item(10, {"Comedy"});
  b.add_rating(5, 30, 4, 100).add_rating(2, 10, 3, 50).add_rating(2, 30, 5, 60);
  const RatingDataset ds = b.build();

  REQUIRE(ds.num_users() == 3);
  CHECK(ds.user(0).id == 2);
  CHECK(ds.user(1).id == 5);
  CHECK(ds.user(2).id == 7);
  CHECK(ds.item(0).id == 10);
  CHECK(ds.item(1).id == 30);
  CHECK(*ds.user_index(5) == 1);
  CHECK(!ds.user_index(99));

  REQUIRE(ds.num_ratings() == 3);
  CHECK(ds.ratings()[0].user == 2);
  CHECK(ds.ratings()[0].item == 10);
  CHECK(ds.ratings()[2].user == 5);

  CHECK(ds.user_count(Gender::Male) == 2);
  CHECK(ds.user_count(Gender::Female) == 1);
  CHECK(ds.rating_count(Gender::Male) == 3);
  CHECK(ds.rating_count(Gender::Female) == 0);
  CHECK(ds.num_rated_items() == 2);
  CHECK(ds.mean_rating() == doctest::Approx(4.0));
}

TEST_CASE("per-user and per-item rating views are sorted and indexed back") {
  const RatingDataset ds = testing::toy_knn_dataset();
  const auto u2 = ds.user_ratings(*ds.user_index(2));
  REQUIRE(u2.size() == 3);
  CHECK(ds.item(u2[0].index).id == 10);
  CHECK(ds.item(u2[2].index).id == 30);
  CHECK(u2[2].value == 5);
  // Entry.rating points back into the flat rating list.
  CHECK(ds.ratings()[u2[2].rating].item == 30);
  CHECK(ds.ratings()[u2[2].rating].user == 2);

  const auto i10 = ds.item_ratings(*ds.item_index(10));
  REQUIRE(i10.size() == 3);
  CHECK(ds.user(i10[0].index).id == 1);
  CHECK(ds.user(i10[2].index).id == 3);
}

TEST_CASE("builder rejects invariant violations") {
  SUBCASE("duplicate user id") {
    DatasetBuilder b;
    b.add_user(1, Gender::Male).add_user(1, Gender::Female);
    CHECK_THROWS_AS(b.build(), DataError);
  }
  SUBCASE("duplicate item id") {
    DatasetBuilder b;
    b.add_item(1, {"Drama"}).add_item(1, {"Comedy"});
    CHECK_THROWS_AS(b.build(), DataError);
  }
  SUBCASE("duplicate rating pair") {
    DatasetBuilder b;
    b.add_user(1, Gender::Male).add_item(1, {"Drama"});
    b.add_rating(1, 1, 3, 0).add_rating(1, 1, 4, 1);
    CHECK_THROWS_AS(b.build(), DataError);
  }
  SUBCASE("rating references unknown ids") {
    DatasetBuilder b;
    b.add_user(1, Gender::Male).add_item(1, {"Drama"});
    b.add_rating(2, 1, 3, 0);
    CHECK_THROWS_AS(b.build(), DataError);
    DatasetBuilder c;
    c.add_user(1, Gender::Male).add_item(1, {"Drama"});
    c.add_rating(1, 2, 3, 0);
    CHECK_THROWS_AS(c.build(), DataError);
  }
  SUBCASE("rating value outside the domain") {
    DatasetBuilder b;
    b.add_user(1, Gender::Male).add_item(1, {"Drama"});
    b.add_rating(1, 1, 3.5, 0);
    CHECK_THROWS_AS(b.build(), DataError);
  }
  SUBCASE("empty genre list") {
    DatasetBuilder b;
    b.add_item(1, {});
    CHECK_THROWS_AS(b.build(), DataError);
  }
  SUBCASE("genre label with reserved characters") {
    DatasetBuilder b;
    b.add_item(1, {"Dra,ma"});
    CHECK_THROWS_AS(b.build(), DataError);
  }
  SUBCASE("duplicate domain value") {
    DatasetBuilder b;
    b.set_rating_values({1, 2, 2});
    CHECK_THROWS_AS(b.build(), DataError);
  }
}

TEST_CASE("genres are sorted and deduplicated") {
  DatasetBuilder b;
  b.add_item(1, {"Drama", "Action", "Drama"});
  const RatingDataset ds = b.build();
  CHECK(ds.item(0).genres == std::vector<std::string>{"Action", "Drama"});
}

TEST_CASE("fingerprint distinguishes datasets and equality compares content") {
  DatasetBuilder b1, b2, b3;
  for (auto* b : {&b1, &b2, &b3}) {
    b->add_user(1, Gender::Male).add_item(1, {"Drama"}).add_item(2, {"Comedy"});
    b->add_rating(1, 1, 3, 0);
  }
  b1.add_rating(1, 2, 4, 1);
  b2.add_rating(1, 2, 4, 1);
  b3.add_rating(1, 2, 5, 1);
  const RatingDataset d1 = b1.build(), d2 = b2.build(), d3 = b3.build();
  CHECK(d1 == d2);
  CHECK(d1.fingerprint() == d2.fingerprint());
  CHECK(!(d1 == d3));
  CHECK(d1.fingerprint() != d3.fingerprint());
}

TEST_CASE("movielens fixture loads with the documented quirks handled") {
  const fs::path dir = testing::fixture_dir() / "ml1m_tiny";
  const RatingDataset ds = load_ml1m((dir / "ratings.dat").string(),
                                     (dir / "users.dat").string(),
                                     (dir / "movies.dat").string());
  CHECK(ds.num_users() == 4);
  CHECK(ds.num_items() == 5);
  CHECK(ds.num_ratings() == 12);
  CHECK(ds.user_count(Gender::Male) == 2);
  CHECK(ds.user_count(Gender::Female) == 2);
  // Movie 4's title itself contains "::"; the genre list is still the last field.
  const auto& weird = ds.item(*ds.item_index(4));
  CHECK(weird.genres == std::vector<std::string>{"Action", "SciFi"});
  // CRLF line ending on the last rating line must not corrupt the timestamp.
  CHECK(ds.ratings().back().timestamp == 978300760);
}

TEST_CASE("movielens parser reports malformed input as data errors") {
  testing::TempDir tmp;
  auto write = [&](const std::string& name, const std::string& text) {
    write_text_file(tmp.str(name), text);
    return tmp.str(name);
  };
  const std::string users = write("users.dat", "1::M::25::0::55555\n");
  const std::string movies = write("movies.dat", "1::Example (1999)::Drama\n");

  SUBCASE("bad gender") {
    const std::string bad = write("bad_users.dat", "1::X::25::0::55555\n");
    CHECK_THROWS_AS(load_ml1m(write("r.dat", "1::1::4::100\n"), bad, movies), DataError);
  }
  SUBCASE("rating outside 1..5") {
    const std::string r = write("r.dat", "1::1::6::100\n");
    CHECK_THROWS_AS(load_ml1m(r, users, movies), DataError);
  }
  SUBCASE("non-integer rating") {
    const std::string r = write("r.dat", "1::1::4.5::100\n");
    CHECK_THROWS_AS(load_ml1m(r, users, movies), DataError);
  }
  SUBCASE("wrong field count") {
    const std::string r = write("r.dat", "1::1::4\n");
    CHECK_THROWS_AS(load_ml1m(r, users, movies), DataError);
  }
  SUBCASE("rating references unknown user") {
    const std::string r = write("r.dat", "9::1::4::100\n");
    CHECK_THROWS_AS(load_ml1m(r, users, movies), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_ml1m(tmp.str("absent.dat"), users, movies), DataError);
  }
}

TEST_CASE("canonical serialization round-trips exactly") {
  const RatingDataset original = testing::toy_knn_dataset();
  testing::TempDir tmp;
  save_canonical(original, tmp.str());
  const RatingDataset reloaded = load_canonical(tmp.str());
  CHECK(reloaded == original);
  CHECK(reloaded.fingerprint() == original.fingerprint());

  // Round-trip is also byte-stable: saving the reload changes nothing.
  testing::TempDir tmp2;
  save_canonical(reloaded, tmp2.str());
  for (const char* name : {"users.csv", "items.csv", "ratings.csv", "domain.csv"})
    CHECK(read_text_file(tmp.str(name)) == read_text_file(tmp2.str(name)));
}

TEST_CASE("canonical loader enforces headers") {
  const RatingDataset original = testing::toy_knn_dataset();
  testing::TempDir tmp;
  save_canonical(original, tmp.str());
  write_text_file(tmp.str("users.csv"), "id,gender\n1,M\n");
  CHECK_THROWS_AS(load_canonical(tmp.str()), DataError);
}
