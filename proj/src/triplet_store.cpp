#include <tboost/triplet_store.hpp>
#include <tboost/text.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace tboost {

Metric parse_metric(std::string_view name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "cityblock") return Metric::cityblock;
  if (name == "cosine") return Metric::cosine;
  throw Error("unknown metric '" + std::string(name) + "'");
}

std::string_view metric_name(Metric m) {
  switch (m) {
  case Metric::euclidean: return "euclidean";
  case Metric::cityblock: return "cityblock";
  case Metric::cosine: return "cosine";
  }
  return "?";
}

namespace detail {

namespace {

bool same_key(const Triplet& a, const Triplet& b) {
  return a.anchor == b.anchor && a.lo() == b.lo() && a.hi() == b.hi();
}

std::string position(std::span<const std::size_t> lines, std::size_t idx) {
  if (lines.empty()) return "index " + std::to_string(idx);
  return "line " + std::to_string(lines[idx]);
}

} // namespace

SortedTriplets::SortedTriplets(std::size_t n_anchors, std::size_t n_refs,
                               std::vector<Triplet> triplets,
                               std::span<const std::size_t> lines)
    : n_anchors_(n_anchors), n_refs_(n_refs) {
  if (!lines.empty() && lines.size() != triplets.size())
    throw Error("line table does not match triplets");
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    const auto& tr = triplets[t];
    if (tr.anchor >= n_anchors || tr.near >= n_refs || tr.far >= n_refs)
      throw Error("triplet id out of range at " + position(lines, t));
    if (tr.near == tr.far)
      throw Error("triplet with identical reference points at " + position(lines, t));
  }

  std::vector<std::size_t> order(triplets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!std::is_sorted(triplets.begin(), triplets.end(), CanonicalLess{})) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return CanonicalLess{}(triplets[a], triplets[b]);
    });
  }
  triplets_.reserve(triplets.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& tr = triplets[order[r]];
    if (r > 0 && same_key(triplets[order[r - 1]], tr)) {
      auto where = position(lines, std::max(order[r - 1], order[r]));
      if (triplets[order[r - 1]] == tr) throw Error("duplicate triplet at " + where);
      throw Error("contradictory triplet at " + where);
    }
    triplets_.push_back(tr);
  }
  index();
}

SortedTriplets SortedTriplets::trusted(std::size_t n_anchors, std::size_t n_refs,
                                       std::vector<Triplet> triplets) {
  SortedTriplets s;
  s.n_anchors_ = n_anchors;
  s.n_refs_ = n_refs;
  s.triplets_ = std::move(triplets);
  s.index();
  return s;
}

void SortedTriplets::index() {
  offsets_.assign(n_anchors_ + 1, 0);
  for (const auto& t : triplets_) ++offsets_[t.anchor + 1];
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
}

std::span<const Triplet> SortedTriplets::anchored(std::size_t anchor) const {
  if (anchor >= n_anchors_) throw Error("anchor id out of range");
  return std::span<const Triplet>(triplets_).subspan(offsets_[anchor],
                                                     offsets_[anchor + 1] - offsets_[anchor]);
}

Orientation SortedTriplets::lookup(std::size_t anchor, std::size_t j, std::size_t k) const {
  if (j == k) throw Error("lookup with identical reference points");
  if (anchor >= n_anchors_ || j >= n_refs_ || k >= n_refs_) return Orientation::absent;
  auto lo = static_cast<Id>(std::min(j, k));
  auto hi = static_cast<Id>(std::max(j, k));
  auto first = triplets_.begin() + static_cast<std::ptrdiff_t>(offsets_[anchor]);
  auto last = triplets_.begin() + static_cast<std::ptrdiff_t>(offsets_[anchor + 1]);
  auto it = std::lower_bound(first, last, std::pair{lo, hi}, [](const Triplet& t, auto key) {
    return t.lo() != key.first ? t.lo() < key.first : t.hi() < key.second;
  });
  if (it == last || it->lo() != lo || it->hi() != hi) return Orientation::absent;
  return it->near == j ? Orientation::forward : Orientation::reverse;
}

} // namespace detail

TripletStore::TripletStore(std::size_t n, std::vector<Triplet> triplets)
    : data_(n, n, std::move(triplets)) {}

TripletStore::TripletStore(detail::SortedTriplets data) : data_(std::move(data)) {
  if (data_.n_anchors() != data_.n_refs()) throw Error("training store needs one universe");
}

TestTripletSet::TestTripletSet(std::size_t n_test, std::size_t n_train,
                               std::vector<Triplet> triplets)
    : data_(n_test, n_train, std::move(triplets)) {}

TestTripletSet::TestTripletSet(detail::SortedTriplets data) : data_(std::move(data)) {}

namespace {

/// Sequential selection sampling: picks exactly `count` of `total` items,
/// each subset equally likely, visiting items in order.
class SelectionSampler {
public:
  SelectionSampler(std::uint64_t total, std::uint64_t count, std::uint64_t seed)
      : rng_(seed), remaining_(total), needed_(count) {}

  bool next() {
    bool take = false;
    if (needed_ > 0) {
      std::uniform_int_distribution<std::uint64_t> pick(0, remaining_ - 1);
      take = pick(rng_) < needed_;
      if (take) --needed_;
    }
    --remaining_;
    return take;
  }

private:
  std::mt19937_64 rng_;
  std::uint64_t remaining_;
  std::uint64_t needed_;
};

std::uint64_t exact_count(double fraction, std::size_t m, const char* what) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw Error(std::string(what) + " must lie in [0, 1]");
  return static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(m)));
}

detail::SortedTriplets subsample_sorted(const detail::SortedTriplets& in, double proportion,
                                        std::uint64_t seed) {
  auto all = in.triplets();
  SelectionSampler sampler(all.size(), exact_count(proportion, all.size(), "proportion"), seed);
  std::vector<Triplet> kept;
  for (const auto& t : all)
    if (sampler.next()) kept.push_back(t);
  return detail::SortedTriplets::trusted(in.n_anchors(), in.n_refs(), std::move(kept));
}

detail::SortedTriplets noise_sorted(const detail::SortedTriplets& in, double rate,
                                    std::uint64_t seed) {
  auto all = in.triplets();
  SelectionSampler sampler(all.size(), exact_count(rate, all.size(), "noise rate"), seed);
  std::vector<Triplet> out(all.begin(), all.end());
  // Swapping keeps the canonical key, so order is preserved.
  for (auto& t : out)
    if (sampler.next()) t = t.swapped();
  return detail::SortedTriplets::trusted(in.n_anchors(), in.n_refs(), std::move(out));
}

/// Distances from one anchor to every reference point. Euclidean distances
/// are squared: the order, and therefore the triplets, is the same.
class DistanceRow {
public:
  DistanceRow(const Dataset& refs, Metric metric) : refs_(refs), metric_(metric) {
    if (!refs.has_features()) throw Error("triplet generation needs feature vectors");
    if (metric == Metric::cosine) {
      norms_.resize(refs.size());
      for (std::size_t r = 0; r < refs.size(); ++r) {
        norms_[r] = norm(refs.features(r));
        if (norms_[r] == 0.0)
          throw Error("zero-norm vector under cosine metric at example " + std::to_string(r));
      }
    }
    row_.resize(refs.size());
  }

  const std::vector<double>& compute(std::span<const double> x) {
    if (x.size() != refs_.dim()) throw Error("feature dimensions differ");
    double xnorm = 0;
    if (metric_ == Metric::cosine) {
      xnorm = norm(x);
      if (xnorm == 0.0) throw Error("zero-norm vector under cosine metric");
    }
    for (std::size_t r = 0; r < refs_.size(); ++r) {
      auto y = refs_.features(r);
      double acc = 0;
      switch (metric_) {
      case Metric::euclidean:
        for (std::size_t d = 0; d < x.size(); ++d) acc += (x[d] - y[d]) * (x[d] - y[d]);
        break;
      case Metric::cityblock:
        for (std::size_t d = 0; d < x.size(); ++d) acc += std::abs(x[d] - y[d]);
        break;
      case Metric::cosine:
        for (std::size_t d = 0; d < x.size(); ++d) acc += x[d] * y[d];
        acc = 1.0 - acc / (xnorm * norms_[r]);
        break;
      }
      row_[r] = acc;
    }
    return row_;
  }

private:
  static double norm(std::span<const double> v) {
    double s = 0;
    for (double a : v) s += a * a;
    return std::sqrt(s);
  }

  const Dataset& refs_;
  Metric metric_;
  std::vector<double> norms_;
  std::vector<double> row_;
};

/// Calls emit(triplet) for every strict comparison in canonical order. With
/// a shared universe, anchors are excluded from their own reference pairs.
template <class Emit>
void for_each_comparison(const Dataset& anchors, const Dataset& refs, Metric metric,
                         bool shared_universe, Emit&& emit) {
  if (!anchors.has_features()) throw Error("triplet generation needs feature vectors");
  DistanceRow distances(refs, metric);
  auto n_refs = static_cast<Id>(refs.size());
  for (Id i = 0; i < anchors.size(); ++i) {
    const auto& d = distances.compute(anchors.features(i));
    for (Id a = 0; a < n_refs; ++a) {
      if (shared_universe && a == i) continue;
      for (Id b = a + 1; b < n_refs; ++b) {
        if (shared_universe && b == i) continue;
        if (d[a] < d[b]) {
          emit(Triplet{i, a, b});
        } else if (d[b] < d[a]) {
          emit(Triplet{i, b, a});
        }
      }
    }
  }
}

template <class Emit>
void subsampled_comparisons(const Dataset& anchors, const Dataset& refs, Metric metric,
                            bool shared_universe, double proportion, std::uint64_t seed,
                            Emit&& emit) {
  std::uint64_t m = 0;
  for_each_comparison(anchors, refs, metric, shared_universe, [&](const Triplet&) { ++m; });
  SelectionSampler sampler(m, exact_count(proportion, m, "proportion"), seed);
  for_each_comparison(anchors, refs, metric, shared_universe, [&](const Triplet& t) {
    if (sampler.next()) emit(t);
  });
}

} // namespace

TripletStore generate_from_vectors(const Dataset& ds, Metric metric) {
  std::vector<Triplet> out;
  for_each_comparison(ds, ds, metric, true, [&](const Triplet& t) { out.push_back(t); });
  return TripletStore(detail::SortedTriplets::trusted(ds.size(), ds.size(), std::move(out)));
}

TripletStore generate_subsampled(const Dataset& ds, Metric metric, double proportion,
                                 std::uint64_t seed) {
  std::vector<Triplet> out;
  subsampled_comparisons(ds, ds, metric, true, proportion, seed,
                         [&](const Triplet& t) { out.push_back(t); });
  return TripletStore(detail::SortedTriplets::trusted(ds.size(), ds.size(), std::move(out)));
}

TestTripletSet generate_test_triplets(const Dataset& train, const Dataset& test, Metric metric) {
  std::vector<Triplet> out;
  for_each_comparison(test, train, metric, false, [&](const Triplet& t) { out.push_back(t); });
  return TestTripletSet(
      detail::SortedTriplets::trusted(test.size(), train.size(), std::move(out)));
}

TestTripletSet generate_test_subsampled(const Dataset& train, const Dataset& test,
                                        Metric metric, double proportion, std::uint64_t seed) {
  std::vector<Triplet> out;
  subsampled_comparisons(test, train, metric, false, proportion, seed,
                         [&](const Triplet& t) { out.push_back(t); });
  return TestTripletSet(
      detail::SortedTriplets::trusted(test.size(), train.size(), std::move(out)));
}

void RatingTable::add(std::size_t user, std::size_t item, double rating) {
  if (item >= items_.size()) items_.resize(item + 1);
  auto& list = items_[item];
  auto it = std::lower_bound(list.begin(), list.end(), user,
                             [](const Entry& e, std::size_t u) { return e.user < u; });
  if (it != list.end() && it->user == user)
    throw Error("repeated rating for user " + std::to_string(user) + " on item " +
                std::to_string(item));
  list.insert(it, Entry{user, rating});
  ++count_;
}

RatingTable read_ratings(std::istream& in, std::optional<std::size_t> n_items) {
  RatingTable table(n_items.value_or(0));
  std::unordered_map<std::string, std::size_t> users;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    auto toks = text::tokens(line);
    if (toks.empty()) continue;
    auto where = " at line " + std::to_string(row);
    if (toks.size() != 3) throw Error("malformed rating" + where);
    auto item = text::parse_uint<std::size_t>(toks[1]);
    auto rating = text::parse_double(toks[2]);
    if (!item || !rating) throw Error("malformed rating" + where);
    if (n_items && *item >= *n_items) throw Error("item id out of range" + where);
    auto [it, fresh] = users.try_emplace(std::string(toks[0]), users.size());
    table.add(it->second, *item, *rating);
  }
  if (table.n_ratings() == 0) throw Error("empty ratings table");
  return table;
}

RatingTable load_ratings(const std::string& path, std::optional<std::size_t> n_items) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_ratings(in, n_items);
}

namespace {

/// Sign of the summed user votes for "i is closer to j than to k".
int corating_vote(const RatingTable& r, std::size_t i, std::size_t j, std::size_t k) {
  auto a = r.item(i), b = r.item(j), c = r.item(k);
  std::size_t p = 0, q = 0, s = 0;
  long votes = 0;
  while (p < a.size() && q < b.size() && s < c.size()) {
    auto u = std::max({a[p].user, b[q].user, c[s].user});
    if (a[p].user < u) { ++p; continue; }
    if (b[q].user < u) { ++q; continue; }
    if (c[s].user < u) { ++s; continue; }
    auto dij = std::abs(a[p].rating - b[q].rating);
    auto dik = std::abs(a[p].rating - c[s].rating);
    votes += (dij < dik) - (dij > dik);
    ++p, ++q, ++s;
  }
  return (votes > 0) - (votes < 0);
}

/// Decodes candidate index c into (anchor, a, b) with a < b, a, b != anchor.
Triplet decode_candidate(std::uint64_t c, std::uint64_t n) {
  auto others = n - 1;
  auto per_anchor = others * (others - 1) / 2;
  auto anchor = c / per_anchor;
  auto r = c % per_anchor;
  // Row a holds (others - 1 - a) pairs; offset(a) = a*(2*others - a - 1)/2.
  auto offset = [&](std::uint64_t a) { return a * (2 * others - a - 1) / 2; };
  std::uint64_t lo = 0, hi = others - 2;
  while (lo < hi) {
    auto mid = (lo + hi + 1) / 2;
    if (offset(mid) <= r) lo = mid; else hi = mid - 1;
  }
  auto a = lo;
  auto b = a + 1 + (r - offset(a));
  auto id = [&](std::uint64_t pos) { return static_cast<Id>(pos < anchor ? pos : pos + 1); };
  return Triplet{static_cast<Id>(anchor), id(a), id(b)};
}

} // namespace

TripletStore generate_from_ratings(const RatingTable& ratings,
                                   std::optional<std::uint64_t> candidate_limit,
                                   std::uint64_t seed) {
  if (ratings.n_ratings() == 0) throw Error("empty ratings table");
  auto n = ratings.n_items();
  std::vector<Triplet> out;
  auto consider = [&](Id i, Id a, Id b) {
    auto v = corating_vote(ratings, i, a, b);
    if (v > 0) out.push_back({i, a, b});
    else if (v < 0) out.push_back({i, b, a});
  };
  if (n < 3) return TripletStore(n, {});
  std::uint64_t total = n * ((n - 1) * (n - 2) / 2);
  if (!candidate_limit || *candidate_limit >= total) {
    for (Id i = 0; i < n; ++i)
      for (Id a = 0; a < n; ++a)
        for (Id b = a + 1; b < n; ++b)
          if (a != i && b != i) consider(i, a, b);
  } else {
    // Floyd's sampling of distinct candidate indices.
    std::mt19937_64 rng(seed);
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(*candidate_limit * 2);
    for (auto j = total - *candidate_limit; j < total; ++j) {
      std::uniform_int_distribution<std::uint64_t> pick(0, j);
      auto t = pick(rng);
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<std::uint64_t> sorted(chosen.begin(), chosen.end());
    std::sort(sorted.begin(), sorted.end());
    for (auto c : sorted) {
      auto t = decode_candidate(c, n);
      consider(t.anchor, t.near, t.far);
    }
  }
  return TripletStore(detail::SortedTriplets::trusted(n, n, std::move(out)));
}

TripletStore subsample(const TripletStore& ts, double proportion, std::uint64_t seed) {
  return TripletStore(subsample_sorted(ts.data(), proportion, seed));
}

TestTripletSet subsample(const TestTripletSet& ts, double proportion, std::uint64_t seed) {
  return TestTripletSet(subsample_sorted(ts.data(), proportion, seed));
}

TripletStore add_noise(const TripletStore& ts, double rate, std::uint64_t seed) {
  return TripletStore(noise_sorted(ts.data(), rate, seed));
}

TestTripletSet add_noise(const TestTripletSet& ts, double rate, std::uint64_t seed) {
  return TestTripletSet(noise_sorted(ts.data(), rate, seed));
}

double triplet_proportion(const TripletStore& ts) {
  auto n = static_cast<double>(ts.n());
  auto candidates = n * (n - 1) * (n - 2) / 2;
  return candidates > 0 ? static_cast<double>(ts.size()) / candidates : 0.0;
}

std::pair<TripletStore, TestTripletSet> partition(const TripletStore& ts,
                                                  std::span<const std::size_t> train_ids,
                                                  std::span<const std::size_t> test_ids) {
  constexpr auto none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> train_of(ts.n(), none), test_of(ts.n(), none);
  for (std::size_t r = 0; r < train_ids.size(); ++r) {
    if (train_ids[r] >= ts.n() || train_of[train_ids[r]] != none)
      throw Error("invalid training id in partition");
    train_of[train_ids[r]] = r;
  }
  for (std::size_t r = 0; r < test_ids.size(); ++r) {
    if (test_ids[r] >= ts.n() || test_of[test_ids[r]] != none || train_of[test_ids[r]] != none)
      throw Error("invalid test id in partition");
    test_of[test_ids[r]] = r;
  }
  std::vector<Triplet> train, test;
  for (const auto& t : ts.triplets()) {
    auto j = train_of[t.near], k = train_of[t.far];
    if (j == none || k == none) continue;
    auto id = [](std::size_t v) { return static_cast<Id>(v); };
    if (train_of[t.anchor] != none) train.push_back({id(train_of[t.anchor]), id(j), id(k)});
    else if (test_of[t.anchor] != none) test.push_back({id(test_of[t.anchor]), id(j), id(k)});
  }
  return {TripletStore(train_ids.size(), std::move(train)),
          TestTripletSet(test_ids.size(), train_ids.size(), std::move(test))};
}

namespace {

std::optional<std::size_t> header_field(std::string_view tok, std::string_view key) {
  auto kv = text::key_value(tok);
  if (!kv || kv->first != key) return std::nullopt;
  return text::parse_uint<std::size_t>(kv->second);
}

struct RawTriplets {
  std::vector<Triplet> triplets;
  std::vector<std::size_t> lines;
};

RawTriplets read_body(std::istream& in, std::size_t first_line) {
  RawTriplets raw;
  std::string line;
  auto row = first_line;
  while (std::getline(in, line)) {
    ++row;
    auto toks = text::tokens(line);
    if (toks.empty()) continue;
    auto where = " at line " + std::to_string(row);
    if (toks.size() != 3) throw Error("malformed triplet" + where);
    auto i = text::parse_uint<Id>(toks[0]);
    auto j = text::parse_uint<Id>(toks[1]);
    auto k = text::parse_uint<Id>(toks[2]);
    if (!i || !j || !k) throw Error("malformed triplet" + where);
    raw.triplets.push_back({*i, *j, *k});
    raw.lines.push_back(row);
  }
  return raw;
}

void write_body(std::ostream& out, std::span<const Triplet> triplets) {
  std::string buf;
  for (const auto& t : triplets) {
    buf.clear();
    buf += std::to_string(t.anchor);
    buf += ' ';
    buf += std::to_string(t.near);
    buf += ' ';
    buf += std::to_string(t.far);
    buf += '\n';
    out << buf;
  }
}

std::vector<std::string_view> read_header(std::istream& in, std::string& line,
                                          std::string_view magic) {
  if (!std::getline(in, line)) throw Error("missing " + std::string(magic) + " header");
  auto toks = text::tokens(line);
  if (toks.empty() || toks[0] != magic)
    throw Error("not a " + std::string(magic) + " file");
  if (toks.size() < 2 || toks[1] != "v1")
    throw Error("unsupported " + std::string(magic) + " version '" +
                std::string(toks.size() > 1 ? toks[1] : "") + "'");
  return toks;
}

} // namespace

void write_triplets(std::ostream& out, const TripletStore& ts) {
  out << "tripletset v1 n=" << ts.n() << " m=" << ts.size() << '\n';
  write_body(out, ts.triplets());
}

TripletStore read_triplets(std::istream& in) {
  std::string line;
  auto toks = read_header(in, line, "tripletset");
  std::optional<std::size_t> n, m;
  if (toks.size() == 4) {
    n = header_field(toks[2], "n");
    m = header_field(toks[3], "m");
  }
  if (!n || !m) throw Error("malformed tripletset header");
  auto raw = read_body(in, 1);
  if (raw.triplets.size() != *m)
    throw Error("triplet count " + std::to_string(raw.triplets.size()) +
                " does not match header m=" + std::to_string(*m));
  return TripletStore(detail::SortedTriplets(*n, *n, std::move(raw.triplets), raw.lines));
}

void save_triplets(const std::string& path, const TripletStore& ts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_triplets(out, ts);
}

TripletStore load_triplets(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_triplets(in);
}

void write_test_triplets(std::ostream& out, const TestTripletSet& ts) {
  out << "testtriplets v1 n_test=" << ts.n_test() << " n_train=" << ts.n_train() << '\n';
  write_body(out, ts.triplets());
}

TestTripletSet read_test_triplets(std::istream& in) {
  std::string line;
  auto toks = read_header(in, line, "testtriplets");
  std::optional<std::size_t> n_test, n_train;
  if (toks.size() == 4) {
    n_test = header_field(toks[2], "n_test");
    n_train = header_field(toks[3], "n_train");
  }
  if (!n_test || !n_train) throw Error("malformed testtriplets header");
  auto raw = read_body(in, 1);
  return TestTripletSet(
      detail::SortedTriplets(*n_test, *n_train, std::move(raw.triplets), raw.lines));
}

void save_test_triplets(const std::string& path, const TestTripletSet& ts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_test_triplets(out, ts);
}

TestTripletSet load_test_triplets(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_test_triplets(in);
}

} // namespace tboost
