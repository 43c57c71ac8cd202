/// @file  experiment.hpp
/// @brief Triplet protocol shared by the CLI and the experiment grid.

#pragma once

#include <tboost/dataset.hpp>
#include <tboost/predict.hpp>
#include <tboost/triplet_store.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tboost {

/// Full generation, exact-count subsampling, then swap noise. Test triplets
/// (when `test` is given) follow the same protocol against training anchors.
struct TripletProtocol {
  Metric metric = Metric::euclidean;
  double proportion = 1.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

TripletStore protocol_triplets(const Dataset& train, const TripletProtocol& proto);
TestTripletSet protocol_test_triplets(const Dataset& train, const Dataset& test,
                                      const TripletProtocol& proto);

/// Experiment description read from "key = value" lines; '#' starts a comment.
///
///   data         = path/to/data.csv | moons
///   header       = true | false          (csv only)
///   moons_n      = 500
///   moons_noise  = 0.1
///   metric       = euclidean | cityblock | cosine
///   proportions  = 0.01, 0.05, 0.1
///   noise        = 0, 0.1, 0.2
///   rounds       = 100000
///   repetitions  = 10
///   seed         = 0
///   test_fraction = 0.3
///   out          = results.csv            (optional)
struct ExperimentSpec {
  std::string data;
  bool header = false;
  std::size_t moons_n = 500;
  double moons_noise = 0.1;
  Metric metric = Metric::euclidean;
  std::vector<double> proportions;
  std::vector<double> noise_levels;
  std::size_t rounds = 1000;
  std::size_t repetitions = 1;
  std::uint64_t seed = 0;
  double test_fraction = 0.3;
  std::string out;
};

ExperimentSpec read_experiment_spec(std::istream& in);
ExperimentSpec load_experiment_spec(const std::string& path);

/// Seeds of one repetition. Every cell of a repetition shares them, so
/// cells differ only in proportion and noise.
struct CellSeeds {
  std::uint64_t repetition;
  std::uint64_t data;
  std::uint64_t split;
  std::uint64_t triplets;
  std::uint64_t boost;
  std::uint64_t eval;
};

CellSeeds derive_cell_seeds(std::uint64_t seed, std::size_t repetition);

struct ExperimentRow {
  Metric metric;
  double proportion;
  double noise;
  std::uint64_t seed;
  double accuracy;
  double abstention_rate;
};

/// Runs every repetition x proportion x noise cell on up to `threads`
/// workers (0 = hardware concurrency). Rows come back sorted.
std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec, std::size_t threads = 0);

/// CSV "metric,proportion,noise,seed,accuracy,abstention_rate".
void write_experiment(std::ostream& out, const std::vector<ExperimentRow>& rows);

/// Parses "a,b,c" or "start:step:stop" (inclusive, tolerant to rounding).
std::vector<double> parse_grid(std::string_view s);

} // namespace tboost
