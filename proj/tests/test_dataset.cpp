#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <flowcast/dataset.hpp>
#include <flowcast/rng.hpp>

using namespace flowcast;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& contents) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path);
  out << contents;
  return path;
}

}  // namespace

TEST_CASE("load_csv parses a small file") {
  const auto path = temp_file("ds_small.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n");
  const RawSeries s = load_csv(path.string());
  CHECK(s.rows() == 4);
  CHECK(s.cols() == 3);
  CHECK(s.target_index == 2);
  CHECK(s.values(0, 0) == 1.0);
  CHECK(s.values(3, 2) == 12.0);
  CHECK(s.column_names == std::vector<std::string>{"a", "b", "y"});
  CHECK(s.target() == std::vector<double>{3, 6, 9, 12});
}

TEST_CASE("load_csv resolves the target by name or index") {
  const auto path = temp_file("ds_target.csv", "a,b,y\n1,2,3\n4,5,6\n");
  CHECK(load_csv(path.string(), "b").target_index == 1);
  CHECK(load_csv(path.string(), "0").target_index == 0);
  CHECK_THROWS_AS(load_csv(path.string(), "missing"), DataError);
}

TEST_CASE("load_csv names the offending row for bad cells") {
  const auto path = temp_file("ds_bad.csv", "a,b\n1,2\n1,abc\n3,4\n");
  CHECK_THROWS_WITH(load_csv(path.string()),
                    Catch::Matchers::ContainsSubstring("row 2") &&
                        Catch::Matchers::ContainsSubstring("abc"));
}

TEST_CASE("load_csv rejects non-finite cells") {
  const auto path = temp_file("ds_inf.csv", "a,b\n1,2\n1,inf\n");
  CHECK_THROWS_AS(load_csv(path.string()), DataError);
}

TEST_CASE("load_csv input validation") {
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), DataError);
  const auto one_col = temp_file("ds_1col.csv", "a\n1\n2\n");
  CHECK_THROWS_AS(load_csv(one_col.string()), DataError);
  const auto one_row = temp_file("ds_1row.csv", "a,b\n1,2\n");
  CHECK_THROWS_AS(load_csv(one_row.string()), DataError);
  const auto ragged = temp_file("ds_ragged.csv", "a,b\n1,2\n1\n");
  CHECK_THROWS_WITH(load_csv(ragged.string()), Catch::Matchers::ContainsSubstring("row 2"));
}

TEST_CASE("load_csv accepts a wide file") {
  const std::size_t cols = 70, rows = 2000;
  std::string text;
  for (std::size_t c = 0; c < cols; ++c) text += (c ? ",x" : "x") + std::to_string(c);
  text += '\n';
  Rng rng(5);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      text += (c ? "," : "") + std::to_string(rng.uniform(-100.0, 100.0));
    }
    text += '\n';
  }
  const auto path = temp_file("ds_wide.csv", text);
  const RawSeries s = load_csv(path.string());
  CHECK(s.rows() == rows);
  CHECK(s.cols() == cols);
}

TEST_CASE("csv write/load round-trips values bit-exactly") {
  Matrix m(3, 2);
  Rng rng(99);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1e6, 1e6);
  const auto path = fs::temp_directory_path() / "ds_roundtrip.csv";
  write_csv(path.string(), m, {"a", "y"});
  const RawSeries back = load_csv(path.string());
  CHECK(back.values == m);
}

TEST_CASE("normalizer basics") {
  SECTION("midpoint of [0, 10]") {
    const std::vector<double> col{0, 10};
    const Normalizer n = Normalizer::fit(std::span<const double>(col));
    CHECK(n.apply_at(0, 5.0) == 0.5);
    CHECK(n.apply_at(0, 0.0) == 0.0);
    CHECK(n.apply_at(0, 10.0) == 1.0);
  }
  SECTION("constant column maps to 0.5 and inverts to the constant") {
    const std::vector<double> col{7, 7, 7};
    const Normalizer n = Normalizer::fit(std::span<const double>(col));
    CHECK(n.apply_at(0, 7.0) == 0.5);
    CHECK(n.invert_at(0, n.apply_at(0, 7.0)) == 7.0);
  }
  SECTION("hand-computed interior point") {
    const std::vector<double> col{2, 4, 6, 8};
    const Normalizer n = Normalizer::fit(std::span<const double>(col));
    CHECK_THAT(n.apply_at(0, 6.0), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
  }
}

TEST_CASE("normalizer maps fitted extremes to 0 and 1 exactly and round-trips") {
  Rng rng(17);
  Matrix m(40, 3);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-500.0, 500.0);
  const Normalizer n = Normalizer::fit(m);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(n.apply_at(c, n.mins()[c]) == 0.0);
    CHECK(n.apply_at(c, n.maxs()[c]) == 1.0);
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double back = n.invert_at(c, n.apply_at(c, m(r, c)));
      CHECK_THAT(back, Catch::Matchers::WithinRel(m(r, c), 1e-12));
    }
  }
}

TEST_CASE("fit_normalizer works on selected raw columns") {
  RawSeries s;
  s.values = Matrix::from_rows({{1, 100, 5}, {3, 200, 5}});
  s.column_names = {"a", "b", "y"};
  s.target_index = 2;
  const std::vector<std::size_t> cols{0, 1};
  const Normalizer n = fit_normalizer(s, cols);
  CHECK(n.apply_at(0, 2.0) == 0.5);
  CHECK(n.apply_at(1, 150.0) == 0.5);
  CHECK_THROWS_AS(fit_normalizer(s, std::span<const std::size_t>{}), DataError);
}

namespace {

SupervisedSet tagged_set(std::size_t rows) {
  SupervisedSet set;
  set.X = Matrix(rows, 2);
  set.y.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    set.X(r, 0) = static_cast<double>(r);
    set.X(r, 1) = static_cast<double>(2 * r);
    set.y[r] = static_cast<double>(r);
  }
  set.layout = {{0, 0}, {0, 1}};
  return set;
}

}  // namespace

TEST_CASE("holdout split sizes and determinism") {
  const auto [train9, test9] = split_indices(9, {2.0 / 3.0, 1});
  CHECK(train9.size() == 6);
  CHECK(test9.size() == 3);

  const auto again = split_indices(9, {2.0 / 3.0, 1});
  CHECK(again.first == train9);
  CHECK(again.second == test9);

  const auto other_seed = split_indices(9, {2.0 / 3.0, 2});
  CHECK(other_seed.first != train9);
}

TEST_CASE("holdout split partitions every row exactly once") {
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 987654321ull}) {
    const auto [train, test] = split_indices(300, {2.0 / 3.0, seed});
    std::set<std::size_t> seen(train.begin(), train.end());
    seen.insert(test.begin(), test.end());
    CHECK(seen.size() == 300);
    CHECK(train.size() + test.size() == 300);
    CHECK(*seen.rbegin() == 299);
    CHECK(std::is_sorted(train.begin(), train.end()));
    CHECK(std::is_sorted(test.begin(), test.end()));
  }
}

TEST_CASE("holdout split errors") {
  CHECK_THROWS_AS(split_indices(2, {2.0 / 3.0, 0}), DataError);
  CHECK_THROWS_AS(split_indices(3, {0.05, 0}), DataError);
  CHECK_THROWS_AS(split_indices(3, {0.99, 0}), DataError);
}

TEST_CASE("holdout_split carries rows through untouched") {
  const SupervisedSet set = tagged_set(30);
  const auto [train, test] = holdout_split(set, {2.0 / 3.0, 7});
  CHECK(train.rows() == 20);
  CHECK(test.rows() == 10);
  CHECK(train.layout == set.layout);
  std::set<double> ys;
  for (double v : train.y) ys.insert(v);
  for (double v : test.y) ys.insert(v);
  CHECK(ys.size() == 30);
  for (std::size_t r = 0; r < train.rows(); ++r) {
    CHECK(train.X(r, 1) == 2 * train.X(r, 0));
    CHECK(train.y[r] == train.X(r, 0));
  }
}
