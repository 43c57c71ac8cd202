#include <tboost/bounds.hpp>
#include <tboost/text.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace tboost {

double training_error_bound(std::size_t L, std::span<const double> z_history) {
  double log_prod = 0;
  for (double z : z_history) {
    if (!(z > 0)) throw Error("normalizers must be positive");
    log_prod += std::log(z);
  }
  return static_cast<double>(L) / 2.0 * std::exp(log_prod);
}

double training_error_bound(std::size_t L, std::span<const RoundStats> stats) {
  std::vector<double> z;
  z.reserve(stats.size());
  for (const auto& s : stats) z.push_back(s.z);
  return training_error_bound(L, z);
}

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double log_sum_exp(std::span<const double> v) {
  auto m = *std::max_element(v.begin(), v.end());
  if (std::isinf(m)) return m;
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// log(e^{-F(y)} + sum over y' != y of e^{F(y')}).
double log_denominator(std::span<const double> f, std::size_t y) {
  std::vector<double> terms(f.begin(), f.end());
  terms[y] = -f[y];
  return log_sum_exp(terms);
}

} // namespace

double margin(std::span<const double> scores, double fired_alpha, std::size_t y, double eta) {
  if (!(eta > 0)) throw Error("margin needs a positive total classifier weight");
  auto L = scores.size();
  if (y >= L) throw Error("label out of range");
  if (L < 2) throw Error("margin needs at least two labels");

  std::vector<double> f(L);
  for (std::size_t l = 0; l < L; ++l) f[l] = 2.0 * scores[l] - fired_alpha;
  auto log_dy = log_denominator(f, y);

  // The gap in nu between y and l is log(D_l / D_y) / eta, with
  // D_l - D_y = (e^{F(y)} - e^{F(l)}) (1 + e^{-F(y)-F(l)}).
  auto worst = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < L; ++l) {
    if (l == y) continue;
    auto diff = 2.0 * (scores[y] - scores[l]);
    double gap = 0;
    if (diff != 0) {
      auto log_abs = std::max(f[y], f[l]) + std::log(-std::expm1(-std::abs(diff))) +
                     softplus(-f[y] - f[l]) - log_dy;
      auto r = std::copysign(std::exp(log_abs), diff);
      gap = std::abs(r) < 0.5 ? std::log1p(r) : log_denominator(f, l) - log_dy;
    }
    worst = std::min(worst, gap);
  }
  return worst / (2.0 * eta);
}

std::vector<double> training_margins(const StrongModel& model, const Dataset& ds,
                                     const TripletStore& ts) {
  if (ds.size() != ts.n()) throw Error("dataset does not match triplet store");
  auto eta = model.alpha_sum();
  auto preds = training_predictions(model, ts);
  std::vector<double> out;
  out.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i)
    out.push_back(margin(preds[i].scores, preds[i].fired_alpha, ds.label(i), eta));
  return out;
}

double empirical_margin_bound(std::size_t L, std::span<const RoundStats> stats, std::size_t n,
                              double theta) {
  if (n == 0) throw Error("margin bound needs n >= 1");
  auto s = 1.0 / static_cast<double>(n);
  double log_prod = 0;
  for (const auto& r : stats) {
    if (!(r.z > 0)) throw Error("normalizers must be positive");
    log_prod += std::log(r.z) + theta / 2.0 * std::log1p((r.w_plus - r.w_minus) / (r.w_minus + s));
  }
  return static_cast<double>(L) / 2.0 * std::exp(log_prod);
}

double abstention_bound(std::size_t n, double p, double C) {
  if (n == 0) throw Error("abstention bound needs n >= 1");
  if (!(p >= 0 && p <= 1)) throw Error("availability p must lie in [0, 1]");
  if (!(C >= 0)) throw Error("classifier count must be nonnegative");
  if (C == 0 || p == 0) return 1.0;
  if (p == 1) return 0.0;
  // 1 - p + p (1-p)^n = 1 - p (1 - (1-p)^n)
  auto fire_train = -std::expm1(static_cast<double>(n) * std::log1p(-p));
  return std::exp(C * std::log1p(-p * fire_train));
}

Estimate simulate_abstention(std::size_t n, double p, std::size_t C, std::size_t trials,
                             std::uint64_t seed) {
  if (trials == 0) throw Error("simulation needs at least one trial");
  if (!(p >= 0 && p <= 1)) throw Error("availability p must lie in [0, 1]");
  std::size_t abstained = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    SplitMix64 g(derive_seed(seed, t));
    bool fired = false;
    for (std::size_t c = 0; c < C && !fired; ++c) {
      // The test-point draw comes first; the n training draws only matter if it fires.
      if (!(g.uniform() < p)) continue;
      for (std::size_t i = 0; i < n && !fired; ++i) fired = g.uniform() < p;
    }
    abstained += !fired;
  }
  Estimate e;
  e.mean = static_cast<double>(abstained) / static_cast<double>(trials);
  e.stderr_ = std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(trials));
  return e;
}

Limit abstention_limit(double k, double beta) {
  constexpr double eps = 1e-12;
  if (!(k >= 0 && k < 3)) throw Error("k must lie in [0, 3)");
  if (!(beta >= 0 && beta <= 2)) throw Error("beta must lie in [0, 2]");
  auto regime = [&](double threshold, Limit at) {
    if (k < threshold - eps) return Limit::one;
    if (k <= threshold + eps) return at;
    return Limit::zero;
  };
  if (beta < 1 - eps) return regime(3 - beta, Limit::exp_minus_1);
  if (beta <= 1 + eps) return regime(2, Limit::exp_exp_minus_2_minus_1);
  return regime((5 - beta) / 2, Limit::exp_minus_2);
}

double limit_value(Limit l) {
  switch (l) {
  case Limit::one: return 1.0;
  case Limit::exp_minus_1: return std::exp(-1.0);
  case Limit::exp_minus_2: return std::exp(-2.0);
  case Limit::exp_exp_minus_2_minus_1: return std::exp(std::exp(-2.0) - 1.0);
  case Limit::zero: return 0.0;
  }
  return 0.0;
}

std::string_view limit_name(Limit l) {
  switch (l) {
  case Limit::one: return "one";
  case Limit::exp_minus_1: return "exp(-1)";
  case Limit::exp_minus_2: return "exp(-2)";
  case Limit::exp_exp_minus_2_minus_1: return "exp(exp(-2)-1)";
  case Limit::zero: return "zero";
  }
  return "?";
}

std::size_t surface_rounds(std::size_t n, double beta) {
  auto c = std::floor(std::pow(static_cast<double>(n), beta) / 2.0 + 0.5);
  return std::max<std::size_t>(1, static_cast<std::size_t>(c));
}

std::vector<SurfaceRow> bound_surface(std::size_t n, std::span<const double> k_grid,
                                      std::span<const double> beta_grid,
                                      std::vector<SurfaceRow>* skipped) {
  if (k_grid.empty() || beta_grid.empty()) throw Error("grids must be nonempty");
  if (n < 2) throw Error("surface needs n >= 2");
  std::vector<SurfaceRow> rows;
  for (double k : k_grid) {
    auto p = 2.0 * std::pow(static_cast<double>(n), k - 3.0);
    for (double beta : beta_grid) {
      if (p > 1) {
        if (skipped) skipped->push_back({k, beta, p});
        continue;
      }
      auto C = static_cast<double>(surface_rounds(n, beta));
      rows.push_back({k, beta, abstention_bound(n, p, C)});
    }
  }
  return rows;
}

void write_surface(std::ostream& out, std::span<const SurfaceRow> rows) {
  out << "k,beta,bound\n";
  for (const auto& r : rows)
    out << text::format_g17(r.k) << ',' << text::format_g17(r.beta) << ','
        << text::format_g17(r.bound) << '\n';
}

} // namespace tboost
