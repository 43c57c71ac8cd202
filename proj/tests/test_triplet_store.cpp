#include "support.hpp"

#include <tboost/triplet_store.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace tboost;

namespace {

Dataset points(const std::vector<std::vector<double>>& xs, std::vector<std::size_t> labels = {}) {
  if (labels.empty()) labels.assign(xs.size(), 0);
  std::vector<double> flat;
  for (const auto& x : xs) flat.insert(flat.end(), x.begin(), x.end());
  return Dataset(LabelDict(std::vector<std::string>{"a", "b"}), labels, {}, flat,
                 xs.empty() ? 1 : xs[0].size());
}

Dataset random_points(std::size_t n, std::size_t dim, std::mt19937_64& rng, bool integer = false) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<std::vector<double>> xs(n, std::vector<double>(dim));
  for (auto& x : xs)
    for (auto& v : x) v = integer ? std::round(u(rng) * 2) : u(rng);
  std::vector<std::size_t> labels(n);
  for (auto& y : labels) y = rng() % 2;
  return points(xs, labels);
}

double dist(std::span<const double> a, std::span<const double> b, Metric m) {
  double s = 0, ab = 0, aa = 0, bb = 0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    if (m == Metric::euclidean) s += (a[d] - b[d]) * (a[d] - b[d]);
    if (m == Metric::cityblock) s += std::abs(a[d] - b[d]);
    ab += a[d] * b[d];
    aa += a[d] * a[d];
    bb += b[d] * b[d];
  }
  if (m == Metric::euclidean) return std::sqrt(s);
  if (m == Metric::cosine) return 1 - ab / (std::sqrt(aa) * std::sqrt(bb));
  return s;
}

/// Brute force over ordered (i, j, k), i, j, k distinct.
std::set<std::tuple<Id, Id, Id>> brute(const Dataset& anchors, const Dataset& refs, Metric m,
                                       bool shared) {
  std::set<std::tuple<Id, Id, Id>> out;
  for (Id i = 0; i < anchors.size(); ++i)
    for (Id j = 0; j < refs.size(); ++j)
      for (Id k = 0; k < refs.size(); ++k) {
        if (j == k || (shared && (i == j || i == k))) continue;
        if (dist(anchors.features(i), refs.features(j), m) <
            dist(anchors.features(i), refs.features(k), m))
          out.insert({i, j, k});
      }
  return out;
}

std::set<std::tuple<Id, Id, Id>> as_set(std::span<const Triplet> ts) {
  std::set<std::tuple<Id, Id, Id>> out;
  for (const auto& t : ts) out.insert({t.anchor, t.near, t.far});
  return out;
}

std::string load_error(const std::string& content) {
  std::istringstream in(content);
  try {
    read_triplets(in);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST_CASE("three points on a line") {
  auto ds = points({{0}, {1}, {3}});
  auto ts = generate_from_vectors(ds, Metric::euclidean);
  CHECK(ts.size() == 3);
  CHECK(as_set(ts.triplets()) == std::set<std::tuple<Id, Id, Id>>{{0, 1, 2}, {1, 0, 2}, {2, 1, 0}});
}

TEST_CASE("ties produce neither orientation") {
  auto ds = points({{0}, {1}, {1}});
  auto ts = generate_from_vectors(ds, Metric::euclidean);
  CHECK(ts.lookup(0, 1, 2) == Orientation::absent);
  auto sym = points({{0}, {-1}, {1}});
  CHECK(generate_from_vectors(sym, Metric::cityblock).lookup(0, 1, 2) == Orientation::absent);
}

TEST_CASE("two points give an empty store") {
  CHECK(generate_from_vectors(points({{0}, {1}}), Metric::euclidean).empty());
}

TEST_CASE("generation matches brute force for every metric") {
  std::mt19937_64 rng(1);
  for (auto m : {Metric::euclidean, Metric::cityblock, Metric::cosine}) {
    for (int rep = 0; rep < 5; ++rep) {
      // Integer grids force plenty of distance ties.
      auto ds = random_points(9, 2, rng, rep % 2 == 0);
      bool zero = false;
      for (std::size_t i = 0; i < ds.size(); ++i)
        zero |= ds.features(i)[0] == 0 && ds.features(i)[1] == 0;
      if (m == Metric::cosine && zero) {
        CHECK_THROWS_AS(generate_from_vectors(ds, m), Error);
        continue;
      }
      auto ts = generate_from_vectors(ds, m);
      CHECK(as_set(ts.triplets()) == brute(ds, ds, m, true));
      CHECK(std::is_sorted(ts.triplets().begin(), ts.triplets().end(), CanonicalLess{}));
    }
  }
}

TEST_CASE("generated stores orient every untied candidate exactly once") {
  std::mt19937_64 rng(2);
  auto ds = random_points(12, 3, rng);
  auto ts = generate_from_vectors(ds, Metric::euclidean);
  CHECK(ts.size() == 12 * 11 * 10 / 2);
  for (Id i = 0; i < 12; ++i)
    for (Id j = 0; j < 12; ++j)
      for (Id k = j + 1; k < 12; ++k)
        if (i != j && i != k) CHECK(ts.lookup(i, j, k) != Orientation::absent);
  CHECK(triplet_proportion(ts) == 1.0);
}

TEST_CASE("generation preconditions") {
  auto no_features = testing::labels_only({0, 1, 0}, 2);
  CHECK_THROWS_AS(generate_from_vectors(no_features, Metric::euclidean), Error);
  auto zero = points({{0, 0}, {1, 0}, {0, 1}});
  CHECK_THROWS_WITH_AS(generate_from_vectors(zero, Metric::cosine),
                       "zero-norm vector under cosine metric at example 0", Error);
  CHECK_THROWS_AS(parse_metric("manhattan"), Error);
}

TEST_CASE("lookup") {
  TripletStore ts(3, {{0, 1, 2}});
  CHECK(ts.lookup(0, 1, 2) == Orientation::forward);
  CHECK(ts.lookup(0, 2, 1) == Orientation::reverse);
  CHECK(ts.lookup(1, 0, 2) == Orientation::absent);
  CHECK(ts.lookup(7, 0, 2) == Orientation::absent);
  CHECK_THROWS_AS(ts.lookup(0, 1, 1), Error);
}

TEST_CASE("store construction enforces its invariants") {
  CHECK_THROWS_WITH_AS(TripletStore(3, {{0, 1, 2}, {0, 2, 1}}), "contradictory triplet at index 1",
                       Error);
  CHECK_THROWS_WITH_AS(TripletStore(3, {{0, 1, 2}, {0, 1, 2}}), "duplicate triplet at index 1",
                       Error);
  CHECK_THROWS_AS(TripletStore(3, {{0, 1, 1}}), Error);
  CHECK_THROWS_AS(TripletStore(3, {{0, 1, 3}}), Error);
  // Anchors may be one of their own reference points.
  TripletStore self(3, {{0, 0, 1}});
  CHECK(self.lookup(0, 1, 0) == Orientation::reverse);
  TripletStore unsorted(4, {{3, 2, 1}, {0, 3, 1}, {1, 0, 2}, {0, 1, 2}});
  CHECK(std::is_sorted(unsorted.triplets().begin(), unsorted.triplets().end(), CanonicalLess{}));
  CHECK(unsorted.anchored(0).size() == 2);
  CHECK(unsorted.anchored(2).empty());
}

TEST_CASE("lookup agrees with a linear scan") {
  std::mt19937_64 rng(3);
  auto ts = testing::random_store(10, 0.3, rng);
  auto set = as_set(ts.triplets());
  for (Id i = 0; i < 10; ++i)
    for (Id j = 0; j < 10; ++j)
      for (Id k = 0; k < 10; ++k) {
        if (j == k) continue;
        auto expect = set.count({i, j, k})   ? Orientation::forward
                      : set.count({i, k, j}) ? Orientation::reverse
                                             : Orientation::absent;
        CHECK(ts.lookup(i, j, k) == expect);
      }
}

TEST_CASE("subsample keeps exact counts") {
  std::mt19937_64 rng(4);
  auto full = testing::random_store(20, 0.3, rng);
  CHECK(subsample(full, 1.0, 9) == full);
  CHECK(subsample(full, 0.0, 9).empty());

  std::vector<Triplet> many;
  for (Id i = 0; i < 1000; ++i) many.push_back({i, 1000, 1001});
  TripletStore thousand(1002, many);
  auto sub = subsample(thousand, 0.1, 3);
  CHECK(sub.size() == 100);
  CHECK(sub.n() == thousand.n());
  for (const auto& t : sub.triplets()) CHECK(thousand.lookup(t.anchor, t.near, t.far) == Orientation::forward);
  CHECK(subsample(thousand, 0.1, 3) == sub);
  CHECK_FALSE(subsample(thousand, 0.1, 4) == sub);
  CHECK_THROWS_AS(subsample(thousand, 1.1, 0), Error);
}

TEST_CASE("subsample is uniform") {
  std::vector<Triplet> ten;
  for (Id i = 0; i < 10; ++i) ten.push_back({i, 10, 11});
  TripletStore ts(12, ten);
  std::vector<int> hits(10, 0);
  const int draws = 20000;
  for (int s = 0; s < draws; ++s) {
    auto sub = subsample(ts, 0.3, static_cast<std::uint64_t>(s));
    for (const auto& t : sub.triplets()) ++hits[t.anchor];
  }
  // Each item is kept with probability 3/10.
  double sd = std::sqrt(draws * 0.3 * 0.7);
  for (int h : hits) CHECK(std::abs(h - draws * 0.3) < 4 * sd);
}

TEST_CASE("noise swaps exact counts") {
  std::mt19937_64 rng(5);
  auto ts = testing::random_store(12, 0.2, rng);
  CHECK(add_noise(ts, 0.0, 1) == ts);

  auto all = add_noise(ts, 1.0, 1);
  REQUIRE(all.size() == ts.size());
  for (std::size_t t = 0; t < ts.size(); ++t) CHECK(all.triplets()[t] == ts.triplets()[t].swapped());
  CHECK(add_noise(add_noise(ts, 1.0, 7), 1.0, 7) == ts);

  std::vector<Triplet> ten;
  for (Id i = 0; i < 10; ++i) ten.push_back({i, 10, 11});
  TripletStore small(12, ten);
  auto noisy = add_noise(small, 0.2, 2);
  auto swapped = std::count_if(noisy.triplets().begin(), noisy.triplets().end(),
                               [](const Triplet& t) { return t.near == 11; });
  CHECK(swapped == 2);
  CHECK(noisy.size() == 10);
}

TEST_CASE("streamed subsampling equals generate-then-subsample") {
  std::mt19937_64 rng(6);
  auto ds = random_points(15, 2, rng);
  for (double p : {0.0, 0.05, 0.37, 1.0}) {
    auto seed = rng();
    CHECK(generate_subsampled(ds, Metric::euclidean, p, seed) ==
          subsample(generate_from_vectors(ds, Metric::euclidean), p, seed));
  }
  auto test = random_points(6, 2, rng);
  auto seed = rng();
  CHECK(generate_test_subsampled(ds, test, Metric::cityblock, 0.2, seed) ==
        subsample(generate_test_triplets(ds, test, Metric::cityblock), 0.2, seed));
}

TEST_CASE("test triplets use training points as references") {
  std::mt19937_64 rng(7);
  auto train = random_points(8, 2, rng);
  auto test = random_points(4, 2, rng);
  auto tx = generate_test_triplets(train, test, Metric::euclidean);
  CHECK(tx.n_test() == 4);
  CHECK(tx.n_train() == 8);
  CHECK(as_set(tx.triplets()) == brute(test, train, Metric::euclidean, false));
  CHECK(tx.of(2).size() == 8 * 7 / 2);
}

TEST_CASE("partition re-indexes both sides") {
  std::mt19937_64 rng(8);
  auto ds = random_points(10, 2, rng);
  auto ts = generate_from_vectors(ds, Metric::euclidean);
  std::vector<std::size_t> train{0, 2, 3, 5, 7, 8}, test{1, 4, 9};
  auto [tr, te] = partition(ts, train, test);
  CHECK(tr == generate_from_vectors(ds.subset(train), Metric::euclidean));
  CHECK(te == generate_test_triplets(ds.subset(train), ds.subset(test), Metric::euclidean));
  std::vector<std::size_t> overlap{1, 2};
  CHECK_THROWS_AS(partition(ts, train, overlap), Error);
}

TEST_CASE("ratings: single user") {
  RatingTable r(3);
  r.add(0, 0, 5);
  r.add(0, 1, 5);
  r.add(0, 2, 1);
  auto ts = generate_from_ratings(r, std::nullopt, 0);
  CHECK(ts.lookup(0, 1, 2) == Orientation::forward);
  CHECK(ts.size() == 2);
}

TEST_CASE("ratings: missing co-raters and balanced votes") {
  RatingTable r(3);
  r.add(0, 0, 5);
  r.add(0, 1, 5);
  r.add(1, 2, 1);
  CHECK(generate_from_ratings(r, std::nullopt, 0).empty());

  RatingTable tie(3);
  tie.add(0, 0, 3);
  tie.add(0, 1, 3);
  tie.add(0, 2, 1);
  tie.add(1, 0, 3);
  tie.add(1, 1, 1);
  tie.add(1, 2, 3);
  CHECK(generate_from_ratings(tie, std::nullopt, 0).lookup(0, 1, 2) == Orientation::absent);

  CHECK_THROWS_AS(generate_from_ratings(RatingTable(4), std::nullopt, 0), Error);
  CHECK_THROWS_AS(r.add(0, 0, 1), Error);
}

TEST_CASE("ratings: candidate limit examines distinct candidates") {
  std::mt19937_64 rng(9);
  const std::size_t n = 9;
  RatingTable r(n);
  // Distinct ratings per user so every candidate yields a triplet.
  for (std::size_t u = 0; u < 5; ++u)
    for (std::size_t i = 0; i < n; ++i) r.add(u, i, std::ldexp(1.0, static_cast<int>(i)) + 0.01 * static_cast<double>(u));
  auto full = generate_from_ratings(r, std::nullopt, 0);
  auto total = n * (n - 1) * (n - 2) / 2;
  CHECK(full.size() == total);
  CHECK(generate_from_ratings(r, total + 5, 1) == full);
  for (std::uint64_t limit : {std::uint64_t{1}, std::uint64_t{50}, std::uint64_t{total - 1}}) {
    auto part = generate_from_ratings(r, limit, rng());
    CHECK(part.size() == limit);
    for (const auto& t : part.triplets()) CHECK(full.lookup(t.anchor, t.near, t.far) == Orientation::forward);
  }
}

TEST_CASE("ratings file parsing") {
  std::istringstream in("alice 0 4\nbob 1 3.5\n\nalice 2 1\n");
  auto r = read_ratings(in);
  CHECK(r.n_items() == 3);
  CHECK(r.n_ratings() == 3);
  std::istringstream bad("alice 0\n");
  CHECK_THROWS_WITH_AS(read_ratings(bad), "malformed rating at line 1", Error);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_ratings(empty), Error);
}

TEST_CASE("triplet file round trip") {
  std::mt19937_64 rng(10);
  auto ts = testing::random_store(15, 0.2, rng);
  testing::TempDir dir;
  save_triplets(dir.file("a.txt"), ts);
  auto back = load_triplets(dir.file("a.txt"));
  CHECK(back == ts);
  save_triplets(dir.file("b.txt"), back);
  CHECK(testing::read_file(dir.file("a.txt")) == testing::read_file(dir.file("b.txt")));
  CHECK(testing::read_file(dir.file("a.txt")).rfind("tripletset v1 n=15 m=" + std::to_string(ts.size()) + "\n", 0) == 0);

  TripletStore empty(4, {});
  std::ostringstream out;
  write_triplets(out, empty);
  CHECK(out.str() == "tripletset v1 n=4 m=0\n");
  std::istringstream in(out.str());
  CHECK(read_triplets(in) == empty);
}

TEST_CASE("triplet file errors") {
  CHECK(load_error("tripletset v1 n=3 m=2\n0 1 2\n0 2 1\n") == "contradictory triplet at line 3");
  CHECK(load_error("tripletset v1 n=3 m=2\n0 1 2\n0 1 2\n") == "duplicate triplet at line 3");
  CHECK(load_error("tripletset v2 n=3 m=0\n") == "unsupported tripletset version 'v2'");
  CHECK(load_error("tripletset v1 n=3 m=2\n0 1 2\n") ==
        "triplet count 1 does not match header m=2");
  CHECK(load_error("tripletset v1 n=3 m=1\n0 1 x\n") == "malformed triplet at line 2");
  CHECK(load_error("tripletset v1 n=3 m=1\n0 1 5\n") == "triplet id out of range at line 2");
  CHECK(load_error("hello\n") == "not a tripletset file");
}

TEST_CASE("test triplet file round trip") {
  TestTripletSet tx(2, 4, {{1, 3, 0}, {0, 1, 2}, {1, 0, 2}});
  testing::TempDir dir;
  save_test_triplets(dir.file("t.txt"), tx);
  CHECK(load_test_triplets(dir.file("t.txt")) == tx);
  CHECK(testing::read_file(dir.file("t.txt")) ==
        "testtriplets v1 n_test=2 n_train=4\n0 1 2\n1 0 2\n1 3 0\n");
  CHECK(add_noise(add_noise(tx, 1.0, 3), 1.0, 3) == tx);
}
