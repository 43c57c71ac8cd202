/// @file  predict.hpp
/// @brief Weighted-vote scoring, tie and abstention resolution, and
///        evaluation metrics.

#pragma once

#include <tboost/boost.hpp>
#include <tboost/dataset.hpp>
#include <tboost/triplet_store.hpp>

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tboost {

inline constexpr std::size_t abstain = std::numeric_limits<std::size_t>::max();

struct Prediction {
  /// scores[y]: total weight of fired classifiers whose predicted set has y.
  std::vector<double> scores;
  /// Lowest-id top scorer, or `abstain` when nothing fired.
  std::size_t label = abstain;
  std::size_t matched = 0;
  /// Total weight of the classifiers that fired.
  double fired_alpha = 0.0;

  bool abstained() const { return matched == 0; }
  bool operator==(const Prediction&) const = default;
};

/// Classifiers sorted by reference pair for logarithmic matching. Scores are
/// accumulated in model order, so results equal score_naive bit for bit.
class Scorer {
public:
  explicit Scorer(const StrongModel& model);

  /// `tx` holds triplets (x, j, k) for one example; only (j, k) is read.
  /// Each unordered pair may appear once.
  Prediction score(std::span<const Triplet> tx) const;

private:
  struct Key {
    Id lo, hi;
    std::uint32_t index;
  };
  const StrongModel* model_;
  std::vector<Key> keys_;
};

Prediction score(const StrongModel& model, std::span<const Triplet> tx);

/// Quadratic scan over classifiers and pairs.
Prediction score_naive(const StrongModel& model, std::span<const Triplet> tx);

/// Raw per-label scores, for ranking labels.
std::vector<double> multilabel_scores(const StrongModel& model, std::span<const Triplet> tx);

enum class TiePolicy { random, fixed_lowest };

TiePolicy parse_policy(std::string_view name);

/// Top scorer; ties and abstentions go uniformly at random among the
/// candidates under `random`, to the lowest id under `fixed_lowest`.
std::size_t resolve(const Prediction& p, TiePolicy policy, std::mt19937_64& rng);

/// Labels by decreasing score, ties broken per `policy`.
std::vector<std::size_t> rank_labels(std::span<const double> scores, TiePolicy policy,
                                     std::mt19937_64& rng);

/// Signed votes F(y) = sum over fired classifiers of +alpha if y is in the
/// predicted set and -alpha otherwise.
std::vector<double> signed_votes(const Prediction& p);

/// Predictions for every training example from its own anchored triplets.
std::vector<Prediction> training_predictions(const StrongModel& model, const TripletStore& ts);

/// Fraction of examples whose top score is not unique or not a true label.
double training_error(const StrongModel& model, const Dataset& ds, const TripletStore& ts);

struct EvalReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  double abstention_rate = 0.0;
  std::vector<double> per_class_accuracy;  ///< NaN for classes absent from the data
  double precision_at_1 = 0.0;
  double recall_at_k = 0.0;
  std::size_t k = 0;
};

struct EvalOptions {
  TiePolicy policy = TiePolicy::random;
  std::uint64_t seed = 0;
  std::size_t k = 5;
};

/// Scores each test example against `truth` (labels in model id space).
/// Accuracy checks the resolved label against the first label; precision@1
/// and recall@k check the ranking against the whole truth set.
EvalReport evaluate(const StrongModel& model, const TestTripletSet& tests, const Dataset& truth,
                    const EvalOptions& opt, std::vector<std::size_t>* resolved = nullptr);

/// key=value lines.
void write_report(std::ostream& out, const EvalReport& r, const LabelDict& labels);
/// One JSON object on one line.
std::string report_json(const EvalReport& r, const LabelDict& labels);

/// CSV "example_id,label,abstained,score_0,...".
void write_predictions(std::ostream& out, const StrongModel& model, const TestTripletSet& tests,
                       TiePolicy policy, std::uint64_t seed);

} // namespace tboost
