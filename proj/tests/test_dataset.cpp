#include "support.hpp"

#include <tboost/dataset.hpp>
#include <tboost/text.hpp>

#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace tboost;

namespace {

Dataset parse(const std::string& s, bool header = false) {
  std::istringstream in(s);
  return read_csv(in, header);
}

std::string error_of(const std::string& s) {
  try {
    parse(s);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST_CASE("csv rows give first-occurrence label ids") {
  auto ds = parse("a,0.0\nb,1.0\na,3.0\n");
  CHECK(ds.size() == 3);
  CHECK(ds.num_labels() == 2);
  CHECK(ds.label_ids() == std::vector<std::size_t>{0, 1, 0});
  CHECK(ds.dim() == 1);
  CHECK(ds.features(2)[0] == 3.0);
  CHECK_FALSE(ds.is_multilabel());
}

TEST_CASE("csv errors") {
  CHECK(error_of("") == "empty dataset");
  CHECK(error_of("\n\n") == "empty dataset");
  CHECK(error_of("a,1,2\nb,3\n") == "inconsistent dimension at row 2");
  CHECK(error_of("a,1\nb,x\n").rfind("malformed row at row 2", 0) == 0);
  CHECK(error_of(",1\n").rfind("malformed row at row 1", 0) == 0);
}

TEST_CASE("header line is skipped") {
  auto ds = parse("label,x\nb,1\n", true);
  CHECK(ds.size() == 1);
  CHECK(ds.labels().name(0) == "b");
}

TEST_CASE("label-only rows give a feature-free dataset") {
  auto ds = parse("x\ny\nx\n");
  CHECK(ds.size() == 3);
  CHECK_FALSE(ds.has_features());
}

TEST_CASE("multi-label rows keep the first label as primary") {
  auto ds = parse("drama|comedy\ncomedy\n");
  CHECK(ds.is_multilabel());
  CHECK(ds.label(0) == 0);
  CHECK(ds.truth(0) == 0b11);
  CHECK(ds.truth(1) == 0b10);
}

TEST_CASE("fixed dictionary rejects unknown labels") {
  LabelDict dict(std::vector<std::string>{"a", "b"});
  std::istringstream in("b,1\nc,2\n");
  CHECK_THROWS_WITH_AS(read_csv(in, false, dict, false), "unknown label 'c' at row 2", Error);
  std::istringstream again("b,1\n");
  auto ds = read_csv(again, false, dict, false);
  CHECK(ds.label(0) == 1);
}

TEST_CASE("csv round trip") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::string src;
  for (int r = 0; r < 50; ++r) {
    src += r % 3 == 0 ? "u" : (r % 3 == 1 ? "v|u" : "w");
    for (int d = 0; d < 4; ++d) src += "," + text::format_double(g(rng));
    src += "\n";
  }
  auto ds = parse(src);
  std::ostringstream out;
  write_csv(out, ds);
  auto back = parse(out.str());
  CHECK(back == ds);
  testing::TempDir dir;
  save_csv(dir.file("d.csv"), ds);
  CHECK(load_csv(dir.file("d.csv"), false) == ds);
}

TEST_CASE("split sizes and determinism") {
  auto ds = testing::labels_only({0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, 2);
  auto s = split(ds, 0.3, 7);
  CHECK(s.train.size() == 7);
  CHECK(s.test.size() == 3);
  auto again = split(ds, 0.3, 7);
  CHECK(again.train_ids == s.train_ids);
  CHECK(again.test_ids == s.test_ids);
  CHECK(s.train.labels() == ds.labels());

  auto none = split(ds, 0.0, 7);
  CHECK(none.test.size() == 0);
  CHECK(none.train == ds);

  CHECK_THROWS_AS(split(ds, 1.5, 0), Error);
}

TEST_CASE("split is a partition") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100; ++t) {
    auto n = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    auto f = std::uniform_real_distribution<double>(0, 1)(rng);
    std::vector<std::size_t> labels(n);
    for (auto& y : labels) y = rng() % 3;
    auto ds = testing::labels_only(labels, 3);
    auto s = split(ds, f, rng());
    std::set<std::size_t> all(s.train_ids.begin(), s.train_ids.end());
    for (auto i : s.test_ids) CHECK(all.insert(i).second);
    CHECK(all.size() == n);
    CHECK(*all.rbegin() == n - 1);
    CHECK(std::is_sorted(s.test_ids.begin(), s.test_ids.end()));
    for (std::size_t r = 0; r < s.test_ids.size(); ++r)
      CHECK(s.test.label(r) == ds.label(s.test_ids[r]));
  }
}

TEST_CASE("moons are balanced and reproducible") {
  auto a = make_moons(101, 0.1, 3);
  auto b = make_moons(101, 0.1, 3);
  CHECK(a == b);
  CHECK(a.size() == 101);
  CHECK(a.dim() == 2);
  auto ones = std::count(a.label_ids().begin(), a.label_ids().end(), 1u);
  CHECK(ones == 51);
  CHECK_FALSE(make_moons(101, 0.1, 4) == a);
}
