/// @file  triplet_store.hpp
/// @brief Immutable sorted triplet sets: generation, perturbation, I/O and
///        logarithmic membership queries.

#pragma once

#include <tboost/common.hpp>
#include <tboost/dataset.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tboost {

/// (anchor, near, far): d(anchor, near) < d(anchor, far).
struct Triplet {
  Id anchor = 0;
  Id near = 0;
  Id far = 0;

  Id lo() const { return near < far ? near : far; }
  Id hi() const { return near < far ? far : near; }
  Triplet swapped() const { return {anchor, far, near}; }

  bool operator==(const Triplet&) const = default;
};

/// Canonical order: (anchor, min(near, far), max(near, far)).
struct CanonicalLess {
  bool operator()(const Triplet& a, const Triplet& b) const {
    if (a.anchor != b.anchor) return a.anchor < b.anchor;
    if (a.lo() != b.lo()) return a.lo() < b.lo();
    return a.hi() < b.hi();
  }
};

enum class Orientation { forward, reverse, absent };

enum class Metric { euclidean, cityblock, cosine };

Metric parse_metric(std::string_view name);
std::string_view metric_name(Metric m);

namespace detail {

/// Canonically sorted triplets with per-anchor offsets. Anchors index one
/// universe and reference points another; for training stores both coincide.
class SortedTriplets {
public:
  SortedTriplets() = default;
  /// Validates ids, sorts, and rejects duplicate or contradictory entries.
  /// `lines`, when given, names the source line of each triplet in errors.
  SortedTriplets(std::size_t n_anchors, std::size_t n_refs, std::vector<Triplet> triplets,
                 std::span<const std::size_t> lines = {});

  std::size_t n_anchors() const { return n_anchors_; }
  std::size_t n_refs() const { return n_refs_; }
  std::size_t size() const { return triplets_.size(); }
  std::span<const Triplet> triplets() const { return triplets_; }
  std::span<const Triplet> anchored(std::size_t anchor) const;
  Orientation lookup(std::size_t anchor, std::size_t j, std::size_t k) const;

  bool operator==(const SortedTriplets& o) const {
    return n_anchors_ == o.n_anchors_ && n_refs_ == o.n_refs_ && triplets_ == o.triplets_;
  }

  /// Skips validation; input must already be canonical and valid.
  static SortedTriplets trusted(std::size_t n_anchors, std::size_t n_refs,
                                std::vector<Triplet> triplets);

private:
  void index();

  std::size_t n_anchors_ = 0;
  std::size_t n_refs_ = 0;
  std::vector<Triplet> triplets_;
  std::vector<std::size_t> offsets_;
};

} // namespace detail

/// Triplets over one example universe 0..n-1 (the training set).
class TripletStore {
public:
  TripletStore() = default;
  /// Throws on out-of-range ids, near == far, duplicates and contradictions.
  TripletStore(std::size_t n, std::vector<Triplet> triplets);

  std::size_t n() const { return data_.n_anchors(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }
  std::span<const Triplet> triplets() const { return data_.triplets(); }
  std::span<const Triplet> anchored(std::size_t i) const { return data_.anchored(i); }

  /// forward if (i,j,k) is present, reverse if (i,k,j) is, absent otherwise.
  /// Throws when j == k.
  Orientation lookup(std::size_t i, std::size_t j, std::size_t k) const {
    return data_.lookup(i, j, k);
  }

  bool operator==(const TripletStore&) const = default;

  const detail::SortedTriplets& data() const { return data_; }
  explicit TripletStore(detail::SortedTriplets data);

private:
  detail::SortedTriplets data_;
};

/// Per-test-example triplets (x, j, k) with x a test id and j, k training ids.
class TestTripletSet {
public:
  TestTripletSet() = default;
  TestTripletSet(std::size_t n_test, std::size_t n_train, std::vector<Triplet> triplets);

  std::size_t n_test() const { return data_.n_anchors(); }
  std::size_t n_train() const { return data_.n_refs(); }
  std::size_t size() const { return data_.size(); }
  std::span<const Triplet> triplets() const { return data_.triplets(); }
  /// T_x for test example x, canonically sorted.
  std::span<const Triplet> of(std::size_t x) const { return data_.anchored(x); }
  Orientation lookup(std::size_t x, std::size_t j, std::size_t k) const {
    return data_.lookup(x, j, k);
  }

  bool operator==(const TestTripletSet&) const = default;

  const detail::SortedTriplets& data() const { return data_; }
  explicit TestTripletSet(detail::SortedTriplets data);

private:
  detail::SortedTriplets data_;
};

/// Every (i, j, k) with i, j, k distinct and d(x_i,x_j) < d(x_i,x_k).
/// Ties produce neither orientation.
TripletStore generate_from_vectors(const Dataset& ds, Metric metric);

/// Same result as subsample(generate_from_vectors(ds, metric), proportion,
/// seed) without materializing the full set.
TripletStore generate_subsampled(const Dataset& ds, Metric metric, double proportion,
                                 std::uint64_t seed);

/// Test-time triplets: anchors are the rows of `test`, reference points every
/// unordered pair of rows of `train`.
TestTripletSet generate_test_triplets(const Dataset& train, const Dataset& test, Metric metric);
TestTripletSet generate_test_subsampled(const Dataset& train, const Dataset& test,
                                        Metric metric, double proportion, std::uint64_t seed);

/// Sparse user x item ratings. Items are dense 0..n-1; users are arbitrary.
class RatingTable {
public:
  struct Entry {
    std::size_t user;
    double rating;
  };

  RatingTable() = default;
  explicit RatingTable(std::size_t n_items) : items_(n_items) {}

  /// Throws on a repeated (user, item) pair.
  void add(std::size_t user, std::size_t item, double rating);
  std::size_t n_items() const { return items_.size(); }
  std::size_t n_ratings() const { return count_; }
  /// Ratings of one item sorted by user.
  std::span<const Entry> item(std::size_t i) const { return items_[i]; }

private:
  std::vector<std::vector<Entry>> items_;
  std::size_t count_ = 0;
};

/// Lines "user item rating"; users may be any token.
RatingTable read_ratings(std::istream& in, std::optional<std::size_t> n_items = {});
RatingTable load_ratings(const std::string& path, std::optional<std::size_t> n_items = {});

/// Triplets from co-ratings: (i,j,k) iff users who rated all three rated
/// (i,j) more similarly than (i,k) on balance. With `candidate_limit`, that
/// many (i,{j,k}) candidates are examined, drawn uniformly without
/// replacement.
TripletStore generate_from_ratings(const RatingTable& ratings,
                                   std::optional<std::uint64_t> candidate_limit,
                                   std::uint64_t seed);

/// Keeps exactly round(proportion * m) triplets, uniformly without replacement.
TripletStore subsample(const TripletStore& ts, double proportion, std::uint64_t seed);
TestTripletSet subsample(const TestTripletSet& ts, double proportion, std::uint64_t seed);

/// Swaps near and far of exactly round(rate * m) uniformly chosen triplets.
TripletStore add_noise(const TripletStore& ts, double rate, std::uint64_t seed);
TestTripletSet add_noise(const TestTripletSet& ts, double rate, std::uint64_t seed);

/// m / (n * C(n-1, 2)), the fraction of generable triplets present.
double triplet_proportion(const TripletStore& ts);

/// Restricts a store over all items to a training store (triplets entirely
/// within `train_ids`, re-indexed) and a test set (anchor in `test_ids`,
/// both references in `train_ids`).
std::pair<TripletStore, TestTripletSet> partition(const TripletStore& ts,
                                                  std::span<const std::size_t> train_ids,
                                                  std::span<const std::size_t> test_ids);

void write_triplets(std::ostream& out, const TripletStore& ts);
TripletStore read_triplets(std::istream& in);
void save_triplets(const std::string& path, const TripletStore& ts);
TripletStore load_triplets(const std::string& path);

void write_test_triplets(std::ostream& out, const TestTripletSet& ts);
TestTripletSet read_test_triplets(std::istream& in);
void save_test_triplets(const std::string& path, const TestTripletSet& ts);
TestTripletSet load_test_triplets(const std::string& path);

} // namespace tboost
