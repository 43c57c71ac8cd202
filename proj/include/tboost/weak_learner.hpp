/// @file  weak_learner.hpp
/// @brief Triplet classifiers: label-set selection, weighted performance and
///        classifier weights.

#pragma once

#include <tboost/common.hpp>
#include <tboost/dataset.hpp>
#include <tboost/triplet_store.hpp>

#include <span>
#include <utility>
#include <vector>

namespace tboost {

/// Nonnegative weights over (example, label) pairs, row-major n x L.
class WeightDistribution {
public:
  WeightDistribution() = default;
  WeightDistribution(std::size_t n, std::size_t L, double value = 0.0)
      : n_(n), L_(L), w_(n * L, value) {}

  std::size_t n() const { return n_; }
  std::size_t num_labels() const { return L_; }

  double& at(std::size_t i, std::size_t y) { return w_[i * L_ + y]; }
  double at(std::size_t i, std::size_t y) const { return w_[i * L_ + y]; }
  std::span<double> row(std::size_t i) { return {w_.data() + i * L_, L_}; }
  std::span<const double> row(std::size_t i) const { return {w_.data() + i * L_, L_}; }
  std::span<double> values() { return w_; }
  std::span<const double> values() const { return w_; }

  /// Sum over labels of row i.
  double marginal(std::size_t i) const;
  double total() const;

  bool operator==(const WeightDistribution&) const = default;

private:
  std::size_t n_ = 0;
  std::size_t L_ = 0;
  std::vector<double> w_;
};

/// A training example on which a reference pair's classifier does not abstain.
struct Firing {
  Id example;
  bool forward;  ///< (example, j, k) present; otherwise (example, k, j)
};

/// Training triplets regrouped by reference pair, so the examples a
/// classifier fires on are one contiguous range.
class PairIndex {
public:
  explicit PairIndex(const TripletStore& ts);

  /// Firings of the classifier on (j, k), in increasing example order.
  std::vector<Firing> firings(Id j, Id k) const;
  void firings(Id j, Id k, std::vector<Firing>& out) const;

private:
  struct Entry {
    Id lo, hi, anchor;
    bool near_is_lo;
  };
  std::vector<Entry> entries_;
};

/// Firings found by one lookup per training example.
std::vector<Firing> firings(const TripletStore& ts, Id j, Id k);

/// h_{j,k}: o_j on forward examples, o_k on reverse ones, abstains otherwise.
struct TripletClassifier {
  Id j = 0;
  Id k = 0;
  LabelMask oj = 0;
  LabelMask ok = 0;
  double alpha = 0.0;

  LabelMask predict(bool forward) const { return forward ? oj : ok; }
  bool operator==(const TripletClassifier&) const = default;
};

struct RoundStats {
  Id j = 0;
  Id k = 0;
  double w_plus = 0.0;
  double w_minus = 0.0;
  double z = 1.0;
  double alpha = 0.0;
};

/// Per label, keeps y iff the signed weight of y over the side's examples is
/// strictly positive (+w when y is a true label of the example, -w otherwise).
std::pair<LabelMask, LabelMask> select_labels(std::span<const Firing> fired, const Dataset& ds,
                                              const WeightDistribution& w);
std::pair<LabelMask, LabelMask> select_labels(Id j, Id k, const TripletStore& ts,
                                              const Dataset& ds, const WeightDistribution& w);

/// (W+, W-): weight of (example, label) pairs the classifier gets right and
/// wrong, over non-abstained examples only.
std::pair<double, double> round_weights(const TripletClassifier& h,
                                        std::span<const Firing> fired, const Dataset& ds,
                                        const WeightDistribution& w);
std::pair<double, double> round_weights(const TripletClassifier& h, const TripletStore& ts,
                                        const Dataset& ds, const WeightDistribution& w);

/// ½ ln((W+ + 1/n) / (W- + 1/n)); exactly zero iff W+ == W-.
double classifier_alpha(double w_plus, double w_minus, std::size_t n);

/// Normalizer of the weight update in closed form; at most 1.
double z_factor(double w_plus, double w_minus, std::size_t n);

} // namespace tboost
