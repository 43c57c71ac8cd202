/// @file  bounds.hpp
/// @brief Training-error, margin and abstention bounds, with a Monte Carlo
///        check of the abstention bound.

#pragma once

#include <tboost/boost.hpp>
#include <tboost/predict.hpp>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace tboost {

/// (L/2) * prod z, evaluated as a sum of logs.
double training_error_bound(std::size_t L, std::span<const double> z_history);
double training_error_bound(std::size_t L, std::span<const RoundStats> stats);

/// Margin of label y for one example. `scores` and `fired_alpha` are as in
/// Prediction; `eta` is the total classifier weight of the model. Positive
/// iff y is the unique top scorer, and in [-1, 1].
double margin(std::span<const double> scores, double fired_alpha, std::size_t y, double eta);

/// Margins of the first label of every training example.
std::vector<double> training_margins(const StrongModel& model, const Dataset& ds,
                                     const TripletStore& ts);

/// (L/2) * prod z_c * ((W+ + 1/n) / (W- + 1/n))^(theta/2).
double empirical_margin_bound(std::size_t L, std::span<const RoundStats> stats, std::size_t n,
                              double theta);

/// (1 - p + p (1 - p)^n)^C; C may be fractional.
double abstention_bound(std::size_t n, double p, double C);

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Fraction of trials in which none of C classifiers fires both on some
/// training point and on the test point, each firing independently with
/// probability p.
Estimate simulate_abstention(std::size_t n, double p, std::size_t C, std::size_t trials,
                             std::uint64_t seed);

enum class Limit { one, exp_minus_1, exp_minus_2, exp_exp_minus_2_minus_1, zero };

/// Large-n limit of the abstention bound with p = 2 n^(k-3) and C = n^beta / 2.
/// Requires 0 <= k < 3 and 0 <= beta <= 2.
Limit abstention_limit(double k, double beta);
double limit_value(Limit l);
std::string_view limit_name(Limit l);

struct SurfaceRow {
  double k;
  double beta;
  double bound;
};

/// Rounds n^beta / 2 half up, with a floor of 1.
std::size_t surface_rounds(std::size_t n, double beta);

/// Bound on every grid point where p = 2 n^(k-3) is at most 1. Skipped points
/// are reported through `skipped` when given.
std::vector<SurfaceRow> bound_surface(std::size_t n, std::span<const double> k_grid,
                                      std::span<const double> beta_grid,
                                      std::vector<SurfaceRow>* skipped = nullptr);

/// CSV "k,beta,bound" with 17 significant digits.
void write_surface(std::ostream& out, std::span<const SurfaceRow> rows);

} // namespace tboost
