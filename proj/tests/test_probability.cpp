#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "drmech/probability.hpp"
#include "drmech/rng.hpp"
#include "oracles.hpp"

using namespace drmech;

namespace {

double expo_cdf(double x, double rate) { return 1.0 - std::exp(-rate * std::max(x, 0.0)); }

// Exponential beta with mean 10 dollars per unit distance (rate 0.1).
DiscomfortModel beta_mean_10() { return DiscomfortModel::exponential(11.0, 110.0, 1.0); }

}  // namespace

TEST_CASE("cdf_eval matches the closed forms") {
  CHECK(cdf_eval(DiscomfortModel::exponential(1.0 / 3.0, 110.0), 0, 0.0) == 0.0);
  CHECK(cdf_eval(DiscomfortModel::uniform(110.0), 0, 110.0) == 1.0);
  CHECK(cdf_eval(DiscomfortModel::exponential(1.0, 110.0), 0, 110.0) ==
        doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
  CHECK_THROWS_AS(cdf_eval(DiscomfortModel::uniform(110.0), 0, -1.0), std::domain_error);
}

TEST_CASE("tabulated cdf interpolates monotonically") {
  SlotDiscomfort d;
  d.family = DiscomfortFamily::Tabulated;
  d.scale = 100.0;
  d.knots_x = {0.0, 50.0, 150.0};
  d.knots_f = {0.0, 0.6, 0.9};
  DiscomfortModel m{{d}};
  CHECK(cdf_eval(m, 0, 0.0) == 0.0);
  CHECK(cdf_eval(m, 0, 25.0) == doctest::Approx(0.3));
  CHECK(cdf_eval(m, 0, 1000.0) == doctest::Approx(0.9));  // sub-CDF tail never accepts
  double prev = -1.0;
  for (double x = 0.0; x <= 200.0; x += 1.0) {
    double f = cdf_eval(m, 0, x);
    CHECK(f >= prev);
    prev = f;
  }
  CHECK(cdf_inverse(m, 0, 0.95) == std::numeric_limits<double>::infinity());
  CHECK(cdf_inverse(m, 0, 0.3) == doctest::Approx(25.0));
}

TEST_CASE("single offer acceptance probability") {
  // Uniform on [0, B] with exponent zero reduces to R / B.
  DiscomfortModel uni = DiscomfortModel::uniform(110.0, 0.0);
  CHECK(single_offer_accept_prob(uni, 0, 1, 55.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(single_offer_accept_prob(uni, 0, 3, 55.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(single_offer_accept_prob(uni, 0, 1, 0.0) == 0.0);

  DiscomfortModel expo = DiscomfortModel::exponential(1.0, 110.0, 1.0);
  CHECK(single_offer_accept_prob(expo, 0, 1, 110.0) ==
        doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(single_offer_accept_prob(expo, 0, 1, 0.0) == 0.0);
  // Farther moves are harder at the same discount.
  CHECK(single_offer_accept_prob(expo, 0, 3, 60.0) <
        single_offer_accept_prob(expo, 0, 1, 60.0));
  CHECK_THROWS_AS(single_offer_accept_prob(expo, 2, 2, 10.0), std::domain_error);
}

TEST_CASE("broadcast distribution: dominance, tie split, zero discounts") {
  DiscomfortModel m = beta_mean_10();

  // Slot 0 dominates slot 2 (same slope, higher intercept).
  ShiftDistribution d = broadcast_shift_distribution(m, 3, 110.0, 1, {20.0, 0.0, 10.0});
  CHECK(d.probabilities[0] == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
  CHECK(d.probabilities[2] == 0.0);
  CHECK(d.probabilities[1] == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK_FALSE(d.had_tie);

  // Equal discounts one step away: the tied pair halves the interval mass.
  d = broadcast_shift_distribution(m, 3, 110.0, 1, {10.0, 0.0, 10.0});
  double half = 0.5 * (1.0 - std::exp(-1.0));
  CHECK(d.probabilities[0] == doctest::Approx(half).epsilon(1e-12));
  CHECK(d.probabilities[2] == doctest::Approx(half).epsilon(1e-12));
  CHECK(d.had_tie);

  d = broadcast_shift_distribution(m, 3, 110.0, 1, {0.0, 0.0, 0.0});
  CHECK(d.probabilities[1] == 1.0);
  CHECK(d.probabilities[0] == 0.0);
  CHECK(d.probabilities[2] == 0.0);
}

TEST_CASE("broadcast distribution: constant discounts mean nobody moves") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 2 + static_cast<int>(rng.below(6));
    double r = rng.uniform(0.0, 110.0);
    DiscomfortModel m = DiscomfortModel::exponential(rng.uniform(0.2, 2.0), 110.0,
                                                     trial % 2 == 0 ? 1.0 : 0.0);
    int j = static_cast<int>(rng.below(n));
    ShiftDistribution d =
        broadcast_shift_distribution(m, n, 110.0, j, std::vector<double>(n, r));
    CHECK(d.probabilities[j] == 1.0);
  }
}

TEST_CASE("broadcast probabilities sum to one and match the pairwise oracle") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + static_cast<int>(rng.below(7));
    double t = trial % 3 == 0 ? 0.0 : (trial % 3 == 1 ? 1.0 : 2.0);
    double rate = rng.uniform(0.02, 0.5);
    DiscomfortModel m = DiscomfortModel::exponential(rate * 110.0, 110.0, t);
    std::vector<double> r(n);
    for (double& v : r) v = rng.uniform(0.0, 110.0);
    if (trial % 4 == 0) r[rng.below(n)] = r[rng.below(n)];  // provoke ties sometimes
    BroadcastChoice choice(m, n, 110.0);
    for (int j = 0; j < n; ++j) {
      ShiftDistribution d = choice.distribution(j, r, 0.0);
      double sum = 0.0;
      for (double p : d.probabilities) {
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

      std::vector<double> coeff(n, 0.0);
      for (int k = 0; k < n; ++k)
        if (k != j) coeff[k] = std::pow(std::abs(k - j), t);
      std::vector<double> ref = oracle::broadcast_probs_pairwise(n, r, coeff, &expo_cdf, rate);
      double ref_sum = 0.0;
      for (double p : ref) ref_sum += p;
      ref[j] += 1.0 - ref_sum;
      for (int i = 0; i < n; ++i)
        CHECK(d.probabilities[i] == doctest::Approx(ref[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("raising a discount never lowers that slot's exact probability") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 3 + static_cast<int>(rng.below(5));
    DiscomfortModel m = DiscomfortModel::exponential(rng.uniform(0.3, 3.0), 110.0, 1.0);
    std::vector<double> r(n);
    for (double& v : r) v = rng.uniform(0.0, 100.0);
    int j = static_cast<int>(rng.below(n));
    int i = (j + 1 + static_cast<int>(rng.below(n - 1))) % n;
    int mirror = 2 * j - i;
    if (mirror >= 0 && mirror < n && std::abs(r[i] - r[mirror]) < 1.0) continue;
    BroadcastChoice choice(m, n, 110.0);
    double before = choice.distribution(j, r, 0.0).probabilities[i];
    r[i] += rng.uniform(0.0, 110.0 - r[i]);
    double after = choice.distribution(j, r, 0.0).probabilities[i];
    CHECK(after >= before - 1e-12);
  }
}

TEST_CASE("broadcast distribution agrees with direct sampling") {
  const int n = 4;
  DiscomfortModel m = DiscomfortModel::exponential(0.8, 110.0, 1.0);
  std::vector<double> r = {35.0, 0.0, 12.0, 60.0};
  const int j = 1;
  BroadcastChoice choice(m, n, 110.0);
  std::vector<double> exact = choice.distribution(j, r, 0.0).probabilities;

  const int64_t samples = 100000;
  Rng rng(2024);
  std::vector<int64_t> hits(n, 0);
  std::vector<int> argmax;
  for (int64_t s = 0; s < samples; ++s) {
    double beta = cdf_inverse(m, j, rng.uniform01_pos());
    double best = 0.0;
    argmax.clear();
    for (int k = 0; k < n; ++k) {
      double u = r[k] - beta * std::abs(k - j);
      if (argmax.empty() || u > best) {
        best = u;
        argmax.assign(1, k);
      } else if (u == best) {
        argmax.push_back(k);
      }
    }
    ++hits[argmax[rng.below(argmax.size())]];
  }
  for (int i = 0; i < n; ++i) {
    double p = exact[i];
    double freq = static_cast<double>(hits[i]) / samples;
    double sd = std::sqrt(p * (1.0 - p) / samples);
    CHECK(std::abs(freq - p) <= std::max(3.0 * sd, 1e-12));
  }
}

TEST_CASE("smoothed probabilities converge to the exact ones") {
  const double B = 110.0;
  DiscomfortModel m = DiscomfortModel::exponential(1.0, B, 1.0);
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    int n = 3 + static_cast<int>(rng.below(4));
    // Discounts on a coarse lattice: any two unequal entries differ by at
    // least 0.1 B, so the smoothed split has a clear winner to converge to.
    std::vector<double> r(n);
    for (double& v : r) v = 11.0 * static_cast<double>(rng.below(11));
    BroadcastChoice choice(m, n, B);
    for (int j = 0; j < n; ++j) {
      std::vector<double> exact = choice.distribution(j, r, 0.0).probabilities;
      bool tied = choice.distribution(j, r, 0.0).had_tie;
      if (tied) continue;  // convergence is claimed off the tie set only
      double prev_err = std::numeric_limits<double>::infinity();
      for (double eps : {B, 0.1 * B, 0.01 * B}) {
        std::vector<double> smooth = choice.distribution(j, r, eps).probabilities;
        double err = 0.0;
        for (int i = 0; i < n; ++i) err = std::max(err, std::abs(smooth[i] - exact[i]));
        CHECK(err <= prev_err + 1e-12);
        prev_err = err;
      }
      CHECK(prev_err < 1e-3);  // at eps = 0.01 B
    }
  }
}
