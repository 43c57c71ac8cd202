#include "support.hpp"

#include <tboost/bounds.hpp>
#include <tboost/experiment.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace tboost;

namespace {

/// Margin straight from the definition, for moderate vote totals.
double margin_direct(const std::vector<double>& scores, double fired, std::size_t y, double eta) {
  auto L = scores.size();
  std::vector<double> f(L);
  for (std::size_t l = 0; l < L; ++l) f[l] = 2 * scores[l] - fired;
  auto nu = [&](std::size_t t) {
    double s = std::exp(-f[t]);
    for (std::size_t l = 0; l < L; ++l)
      if (l != t) s += std::exp(f[l]);
    return -(std::log(s) - std::log(static_cast<double>(L))) / eta;
  };
  double best = -INFINITY;
  for (std::size_t l = 0; l < L; ++l)
    if (l != y) best = std::max(best, nu(l));
  return 0.5 * (nu(y) - best);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

TEST_CASE("training error bound") {
  CHECK(training_error_bound(2, std::vector<double>{}) == 1.0);
  CHECK(training_error_bound(2, std::vector<double>{0.95355}) == doctest::Approx(0.95355).epsilon(1e-15));
  CHECK(training_error_bound(4, std::vector<double>{1, 1, 0.999}) < 2.0);
  CHECK_THROWS_AS(training_error_bound(2, std::vector<double>{0.0}), Error);
  // Products of many factors do not underflow early.
  std::vector<double> many(5000, 0.9);
  CHECK(training_error_bound(2, many) == doctest::Approx(std::exp(5000 * std::log(0.9))));
}

TEST_CASE("margin of a single matching classifier") {
  CHECK(margin(std::vector<double>{0.5, 0.0}, 0.5, 0, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(margin(std::vector<double>{0.5, 0.0}, 0.5, 1, 0.5) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(margin(std::vector<double>{0, 0, 0}, 0, 2, 1.3) == 0.0);
  CHECK_THROWS_AS(margin(std::vector<double>{0, 0}, 0, 0, 0), Error);
}

TEST_CASE("margin matches the direct formula and its sign matches the vote") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 20000; ++t) {
    auto L = 2 + rng() % 5;
    auto C = 1 + rng() % 8;
    // Random small model evaluated at one example.
    std::vector<double> scores(L, 0.0);
    double fired = 0, eta = 0;
    for (std::size_t c = 0; c < C; ++c) {
      // Quantized weights make exact score ties common.
      double alpha = (t % 2 == 0) ? 0.25 * static_cast<double>(1 + rng() % 4) : u(rng) * 3;
      eta += alpha;
      if (rng() % 3 == 0) continue;  // abstains
      fired += alpha;
      auto set = rng() & all_labels(L);
      for (std::size_t y = 0; y < L; ++y)
        if (contains(set, y)) scores[y] += alpha;
    }
    auto y = rng() % L;
    auto theta = margin(scores, fired, y, eta);
    bool unique_top = true;
    for (std::size_t l = 0; l < L; ++l)
      if (l != y && scores[l] >= scores[y]) unique_top = false;
    CHECK((theta > 0) == unique_top);
    CHECK(theta >= -1.0);
    CHECK(theta <= 1.0 + 1e-12);
    CHECK(theta == doctest::Approx(margin_direct(scores, fired, y, eta)).epsilon(1e-9).scale(1));
  }
}

TEST_CASE("margin stays finite for large vote totals") {
  std::vector<double> scores{900.0, 899.0, 10.0};
  auto theta = margin(scores, 1000.0, 0, 1200.0);
  CHECK(std::isfinite(theta));
  CHECK(theta > 0);
  CHECK(margin(scores, 1000.0, 1, 1200.0) < 0);
}

TEST_CASE("empirical margin bound") {
  std::vector<RoundStats> stats{{0, 1, 2.0 / 3, 1.0 / 3, z_factor(2.0 / 3, 1.0 / 3, 3), 0}};
  CHECK(empirical_margin_bound(2, stats, 3, 0.1) ==
        doctest::Approx(0.972088315752608426504).epsilon(1e-14));
  CHECK(empirical_margin_bound(2, stats, 3, 0.0) == training_error_bound(2, stats));
  CHECK(empirical_margin_bound(2, stats, 3, 1e-12) ==
        doctest::Approx(training_error_bound(2, stats)).epsilon(1e-11));
}

TEST_CASE("abstention bound closed form") {
  CHECK(abstention_bound(10, 0.0, 7) == 1.0);
  CHECK(abstention_bound(10, 1.0, 7) == 0.0);
  CHECK(abstention_bound(10, 0.3, 0) == 1.0);
  CHECK(abstention_bound(10, 0.1, 5) == doctest::Approx(0.714086971711562431112).epsilon(1e-14));
  CHECK(abstention_bound(10, 0.1, 50) == doctest::Approx(0.0344755414649585720032).epsilon(1e-13));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 10000; ++t) {
    auto b = abstention_bound(1 + rng() % 100, u(rng), u(rng) * 1000);
    CHECK(b >= 0);
    CHECK(b <= 1);
  }
  CHECK_THROWS_AS(abstention_bound(10, 1.5, 1), Error);
}

TEST_CASE("abstention simulation") {
  auto none = simulate_abstention(10, 0.0, 5, 1000, 1);
  CHECK(none.mean == 1.0);
  CHECK(none.stderr_ == 0.0);
  CHECK(simulate_abstention(10, 0.4, 0, 1000, 1).mean == 1.0);
  auto e = simulate_abstention(10, 0.1, 5, 1000000, 2);
  CHECK(std::abs(e.mean - 0.714086971711562431112) < 3 * e.stderr_);
  CHECK(e.stderr_ == doctest::Approx(std::sqrt(e.mean * (1 - e.mean) / 1e6)));
  auto again = simulate_abstention(10, 0.1, 5, 1000, 3);
  CHECK(again.mean == simulate_abstention(10, 0.1, 5, 1000, 3).mean);
}

TEST_CASE("limit regimes") {
  CHECK(abstention_limit(1, 0.5) == Limit::one);
  CHECK(abstention_limit(2.5, 0.5) == Limit::exp_minus_1);
  CHECK(abstention_limit(2.7, 0.5) == Limit::zero);
  CHECK(abstention_limit(1.9, 1) == Limit::one);
  CHECK(abstention_limit(2, 1) == Limit::exp_exp_minus_2_minus_1);
  CHECK(abstention_limit(2.1, 1) == Limit::zero);
  CHECK(abstention_limit(1.4, 2) == Limit::one);
  CHECK(abstention_limit(1.5, 2) == Limit::exp_minus_2);
  CHECK(abstention_limit(1.6, 2) == Limit::zero);
  CHECK(abstention_limit(1.75, 1.5) == Limit::exp_minus_2);
  CHECK(limit_value(Limit::exp_exp_minus_2_minus_1) ==
        doctest::Approx(0.421192747823535339594).epsilon(1e-15));
  CHECK(limit_value(Limit::exp_minus_2) == std::exp(-2.0));
  CHECK_THROWS_AS(abstention_limit(3, 1), Error);
  CHECK_THROWS_AS(abstention_limit(-0.1, 1), Error);
  CHECK_THROWS_AS(abstention_limit(1, 2.5), Error);
}

TEST_CASE("bound surface") {
  CHECK(surface_rounds(100, 0) == 1);
  CHECK(surface_rounds(100, 1) == 50);
  CHECK(surface_rounds(100, 0.5) == 5);

  std::vector<double> k0{0}, b0{0};
  auto one = bound_surface(100, k0, b0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].bound == doctest::Approx(0.999999999600039597413).epsilon(1e-15));

  auto ks = parse_grid("0:0.1:2.9"), betas = parse_grid("0:0.25:2");
  CHECK(ks.size() == 30);
  CHECK(betas.size() == 9);
  std::vector<SurfaceRow> skipped;
  auto rows = bound_surface(100, ks, betas, &skipped);
  CHECK(rows.size() + skipped.size() == ks.size() * betas.size());
  CHECK(!skipped.empty());
  for (const auto& s : skipped) CHECK(2 * std::pow(100.0, s.k - 3) > 1);
  auto at = [&](double k, double b) {
    for (const auto& r : rows)
      if (r.k == k && r.beta == b) return r.bound;
    return std::nan("");
  };
  for (std::size_t a = 0; a + 1 < ks.size(); ++a)
    for (double b : betas)
      if (!std::isnan(at(ks[a + 1], b))) CHECK(at(ks[a + 1], b) <= at(ks[a], b));
  for (double k : ks)
    for (std::size_t a = 0; a + 1 < betas.size(); ++a)
      if (!std::isnan(at(k, betas[a]))) CHECK(at(k, betas[a + 1]) <= at(k, betas[a]));

  std::ostringstream out;
  write_surface(out, one);
  CHECK(out.str() == "k,beta,bound\n0,0,0.9999999996000396\n");
}

TEST_CASE("training margins sit under the margin bound") {
  auto ds = make_moons(100, 0.1, 4);
  auto ts = generate_subsampled(ds, Metric::euclidean, 0.1, 5);
  BoostConfig cfg;
  cfg.rounds = 2000;
  auto model = train(ds, ts, cfg);
  auto margins = training_margins(model, ds, ts);
  for (double theta : {0.05, 0.1, 0.2}) {
    auto below = std::count_if(margins.begin(), margins.end(), [&](double m) { return m <= theta; });
    CHECK(static_cast<double>(below) / 100 <=
          empirical_margin_bound(2, model.round_stats, 100, theta));
  }
  auto errors = std::count_if(margins.begin(), margins.end(), [](double m) { return m <= 0; });
  CHECK(static_cast<double>(errors) / 100 == training_error(model, ds, ts));
}

TEST_CASE("more triplets do not shrink the median margin") {
  double low = 0, high = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto ds = make_moons(100, 0.1, derive_seed(seed, 0));
    for (double p : {0.01, 0.1}) {
      auto ts = generate_subsampled(ds, Metric::euclidean, p, derive_seed(seed, 1));
      BoostConfig cfg;
      cfg.rounds = 2000;
      cfg.seed = derive_seed(seed, 2);
      auto model = train(ds, ts, cfg);
      (p < 0.05 ? low : high) += median(training_margins(model, ds, ts)) / 10;
    }
  }
  MESSAGE("mean median margin: 1% -> " << low << ", 10% -> " << high);
  CHECK(high >= low);
}
