#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "collabviz/ratings.hpp"
#include "doctest.h"

using namespace collabviz;

namespace {

const RatingScale kFive{1.0, 5.0, 1.0};

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("collabviz_test_" + name);
}

}  // namespace

TEST_CASE("scale normalization maps the declared range onto [0,1]") {
  CHECK(kFive.normalize(5.0) == 1.0);
  CHECK(kFive.normalize(1.0) == 0.0);
  const RatingScale bgg{0.0, 10.0, 0.5};
  CHECK(bgg.normalize(7.5) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(bgg.denormalize(0.75) == 7.5);
  CHECK_THROWS(RatingScale{2.0, 2.0, 0.0}.validate());
}

TEST_CASE("normalization is affine and order preserving") {
  const RatingScale scale{0.0, 10.0, 0.5};
  for (double a = 0.0; a < 10.0; a += 0.5) {
    CHECK(scale.normalize(a) < scale.normalize(a + 0.5));
  }
}

TEST_CASE("parse_triplets assigns dense ids in first-appearance order") {
  const auto m = parse_triplets("user,item,rating\nbob,x,5\nann,y,1\nbob,y,3\n", kFive);
  CHECK(m.user_count() == 2);
  CHECK(m.item_count() == 2);
  CHECK(m.user_id(0) == "bob");
  CHECK(m.user_id(1) == "ann");
  CHECK(m.item_id(1) == "y");
  CHECK(m.size() == 3);
  CHECK(m.entries()[2].value == 0.5);
}

TEST_CASE("parse errors name the offending line") {
  const auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_triplets(text, kFive);
    } catch (const DataError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("user,item,rating\na,x,5\na,x,4\n") == 3);  // duplicate
  CHECK(line_of("user,item,rating\na,x,9\n") == 2);         // out of scale
  CHECK(line_of("user,item,rating\na,x\n") == 2);           // malformed
  CHECK(line_of("user,item,rating\na,x,abc\n") == 2);
  CHECK_THROWS_AS(parse_triplets("a,x,5\n", kFive), DataError);  // no header
}

TEST_CASE("inverted indexes mirror the entry list") {
  std::mt19937_64 rng(4);
  std::vector<Rating> entries;
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 9; ++j) {
      if (rng() % 3 == 0) entries.push_back({i, j, static_cast<double>(rng() % 5) / 4.0});
    }
  }
  const RatingMatrix m(7, 9, entries);
  std::size_t by_user = 0;
  for (std::size_t i = 0; i < 7; ++i) {
    for (const auto& nb : m.items_of(i)) {
      ++by_user;
      const auto users = m.users_of(nb.index);
      CHECK(std::any_of(users.begin(), users.end(),
                        [&](const Neighbor& u) { return u.index == i && u.value == nb.value; }));
    }
  }
  CHECK(by_user == m.size());
}

TEST_CASE("density") {
  CHECK(density(RatingMatrix(2, 2, {{0, 0, 1}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}})) == 1.0);
  CHECK(density(RatingMatrix(2, 2, {})) == 0.0);
  CHECK(density(RatingMatrix(2, 4, {{0, 0, 1}, {1, 3, 0}, {0, 2, 0.5}})) == 0.375);
  // entry order does not matter
  CHECK(density(RatingMatrix(2, 4, {{0, 2, 0.5}, {0, 0, 1}, {1, 3, 0}})) == 0.375);
}

TEST_CASE("distinct levels") {
  const RatingMatrix binary(2, 2, {{0, 0, 0}, {0, 1, 1}, {1, 0, 0}, {1, 1, 1}});
  CHECK(distinct_levels(binary) == std::vector<double>{0.0, 1.0});
  std::string csv = "user,item,rating\n";
  for (int r = 1; r <= 5; ++r) csv += "u,i" + std::to_string(r) + "," + std::to_string(r) + "\n";
  CHECK(distinct_levels(parse_triplets(csv, kFive)) ==
        std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(distinct_levels(RatingMatrix(1, 2, {{0, 0, 0.5}, {0, 1, 0.5}})).size() == 1);
  CHECK_THROWS(distinct_levels(RatingMatrix(1, 1, {})));
}

TEST_CASE("matrix validation") {
  CHECK_THROWS(RatingMatrix(1, 1, {{0, 1, 0.5}}));
  CHECK_THROWS(RatingMatrix(1, 1, {{0, 0, 1.5}}));
  CHECK_THROWS(RatingMatrix(1, 2, {{0, 0, 0.5}, {0, 0, 0.5}}));
}

TEST_CASE("save then load round-trips the matrix") {
  const RatingScale scale{0.0, 10.0, 0.5};
  const auto m = parse_triplets(
      "user,item,rating\nu1,a,7.5\nu2,b,0\nu1,b,10\nu3,a,2.5\nu2,c,9.5\n", scale);
  const auto path = temp_path("roundtrip.csv");
  save_triplets(path, m, scale);
  CHECK(load_triplets(path, scale) == m);
  const auto map_path = temp_path("index.csv");
  save_index_map(map_path, m);
  std::ifstream in(map_path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,original_id,kind");
  std::filesystem::remove(path);
  std::filesystem::remove(map_path);
}

TEST_CASE("missing file names the path") {
  try {
    load_triplets("/nonexistent/ratings.csv", kFive);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/ratings.csv") != std::string::npos);
  }
}
