/// @file  boost.hpp
/// @brief The boosting loop over triplet classifiers and the model file.

#pragma once

#include <tboost/dataset.hpp>
#include <tboost/triplet_store.hpp>
#include <tboost/weak_learner.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace tboost {

/// Every entry 1 / (n L).
WeightDistribution init_weights(std::size_t n, std::size_t L);

/// j with probability proportional to its marginal weight, then k among
/// examples whose truth set differs from j's, proportional to their marginal.
std::pair<Id, Id> sample_reference_pair(const Dataset& ds, const WeightDistribution& w,
                                        std::mt19937_64& rng);

/// Multiplies each non-abstained entry by exp(-alpha) when the classifier is
/// right about that label and exp(alpha) when wrong, then renormalizes.
/// Returns the total before normalization.
double update_weights(WeightDistribution& w, const TripletClassifier& h,
                      std::span<const Firing> fired, const Dataset& ds);
double update_weights(WeightDistribution& w, const TripletClassifier& h, const TripletStore& ts,
                      const Dataset& ds);

struct Checkpoint {
  std::size_t round = 0;
  double train_error = 0.0;
  /// (L/2) times the product of normalizers so far.
  double bound = 0.0;
};

struct BoostConfig {
  std::size_t rounds = 1000;
  std::uint64_t seed = 0;
  bool keep_zero_alpha = false;
  /// Report a checkpoint every this many rounds (and after the last); 0 = never.
  std::size_t stats_every = 0;
  std::function<void(const Checkpoint&)> on_checkpoint;
};

struct StrongModel {
  LabelDict labels;
  std::size_t n_train = 0;
  std::size_t rounds_run = 0;
  std::vector<TripletClassifier> classifiers;
  /// One entry per round, including rounds whose classifier was dropped.
  /// Not part of the model file.
  std::vector<RoundStats> round_stats;

  std::size_t num_labels() const { return labels.size(); }
  double alpha_sum() const;

  /// Compares everything the model file stores.
  bool same_model(const StrongModel& o) const {
    return labels == o.labels && n_train == o.n_train && rounds_run == o.rounds_run &&
           classifiers == o.classifiers;
  }
};

StrongModel train(const Dataset& ds, const TripletStore& ts, const BoostConfig& cfg);

void write_model(std::ostream& out, const StrongModel& model);
StrongModel read_model(std::istream& in);
void save_model(const std::string& path, const StrongModel& model);
StrongModel load_model(const std::string& path);

/// CSV "round,j,k,w_plus,w_minus,z,alpha".
void write_round_stats(std::ostream& out, const StrongModel& model);
std::vector<RoundStats> read_round_stats(std::istream& in);

} // namespace tboost
