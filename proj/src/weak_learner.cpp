#include <tboost/weak_learner.hpp>

#include <algorithm>
#include <cmath>

namespace tboost {

double WeightDistribution::marginal(std::size_t i) const {
  double s = 0;
  for (double v : row(i)) s += v;
  return s;
}

double WeightDistribution::total() const {
  double s = 0;
  for (double v : w_) s += v;
  return s;
}

PairIndex::PairIndex(const TripletStore& ts) {
  entries_.reserve(ts.size());
  for (const auto& t : ts.triplets()) entries_.push_back({t.lo(), t.hi(), t.anchor, t.near < t.far});
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    if (a.lo != b.lo) return a.lo < b.lo;
    if (a.hi != b.hi) return a.hi < b.hi;
    return a.anchor < b.anchor;
  });
}

void PairIndex::firings(Id j, Id k, std::vector<Firing>& out) const {
  out.clear();
  if (j == k) throw Error("reference pair with identical points");
  Id lo = std::min(j, k), hi = std::max(j, k);
  auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{lo, hi},
                             [](const Entry& e, std::pair<Id, Id> key) {
                               return e.lo != key.first ? e.lo < key.first : e.hi < key.second;
                             });
  // near_is_lo says whether the triplet's near point is lo; forward means near == j.
  bool j_is_lo = j < k;
  for (; it != entries_.end() && it->lo == lo && it->hi == hi; ++it)
    out.push_back({it->anchor, it->near_is_lo == j_is_lo});
}

std::vector<Firing> PairIndex::firings(Id j, Id k) const {
  std::vector<Firing> out;
  firings(j, k, out);
  return out;
}

std::vector<Firing> firings(const TripletStore& ts, Id j, Id k) {
  std::vector<Firing> out;
  for (Id i = 0; i < ts.n(); ++i) {
    auto o = ts.lookup(i, j, k);
    if (o != Orientation::absent) out.push_back({i, o == Orientation::forward});
  }
  return out;
}

std::pair<LabelMask, LabelMask> select_labels(std::span<const Firing> fired, const Dataset& ds,
                                              const WeightDistribution& w) {
  auto L = w.num_labels();
  std::vector<double> near(L, 0.0), far(L, 0.0);
  for (const auto& f : fired) {
    auto& side = f.forward ? near : far;
    auto truth = ds.truth(f.example);
    auto r = w.row(f.example);
    for (std::size_t y = 0; y < L; ++y) side[y] += contains(truth, y) ? r[y] : -r[y];
  }
  LabelMask oj = 0, ok = 0;
  for (std::size_t y = 0; y < L; ++y) {
    if (near[y] > 0) oj |= label_bit(y);
    if (far[y] > 0) ok |= label_bit(y);
  }
  return {oj, ok};
}

std::pair<LabelMask, LabelMask> select_labels(Id j, Id k, const TripletStore& ts,
                                              const Dataset& ds, const WeightDistribution& w) {
  return select_labels(firings(ts, j, k), ds, w);
}

std::pair<double, double> round_weights(const TripletClassifier& h,
                                        std::span<const Firing> fired, const Dataset& ds,
                                        const WeightDistribution& w) {
  double plus = 0, minus = 0;
  auto L = w.num_labels();
  for (const auto& f : fired) {
    auto predicted = h.predict(f.forward);
    auto truth = ds.truth(f.example);
    auto r = w.row(f.example);
    for (std::size_t y = 0; y < L; ++y) {
      if (contains(truth, y) == contains(predicted, y)) plus += r[y];
      else minus += r[y];
    }
  }
  return {plus, minus};
}

std::pair<double, double> round_weights(const TripletClassifier& h, const TripletStore& ts,
                                        const Dataset& ds, const WeightDistribution& w) {
  return round_weights(h, firings(ts, h.j, h.k), ds, w);
}

double classifier_alpha(double w_plus, double w_minus, std::size_t n) {
  if (n == 0) throw Error("classifier weight needs n >= 1");
  auto s = 1.0 / static_cast<double>(n);
  // log1p of the exact difference keeps the sign even when the ratio rounds to 1.
  return 0.5 * std::log1p((w_plus - w_minus) / (w_minus + s));
}

double z_factor(double w_plus, double w_minus, std::size_t n) {
  if (n == 0) throw Error("normalizer needs n >= 1");
  auto s = 1.0 / static_cast<double>(n);
  auto ratio = std::sqrt((w_minus + s) / (w_plus + s));
  return (1.0 - w_plus - w_minus) + w_plus * ratio + w_minus / ratio;
}

} // namespace tboost
