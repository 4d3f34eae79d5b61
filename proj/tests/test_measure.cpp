#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rshe/measure.hpp"

using namespace rshe;

namespace {

MeasureView random_view(std::mt19937_64& rng, std::size_t M, double scale = 1.0) {
  return MeasureView(rearrange(GridField(oracle::gaussian_values(rng, M, scale))));
}

}  // namespace

TEST_CASE("pushforward integrals") {
  const MeasureView c = MeasureView::of(GridField(8, 1.25));
  CHECK(pushforward_integral(c, [](double) { return 1.0; }) == 1.0);
  CHECK(pushforward_integral(c, [](double y) { return y; }) == 1.25);

  const SpectralField coeffs({0.4, 0.9, 0.2});
  const auto mv = MeasureView::of(to_grid(coeffs, 64));
  CHECK(pushforward_integral(mv, [](double y) { return y; }) == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("law depends only on the multiset of values") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = oracle::gaussian_values(rng, 20);
    const auto mv = MeasureView::of(GridField(v));
    auto f = [](double y) { return std::sin(3.0 * y) + y * y; };
    const double a = pushforward_integral(mv, f);
    std::shuffle(v.begin(), v.end(), rng);
    CHECK(law_mean(v, f) == a);
    std::vector<double> mapped(v.size());
    std::transform(v.begin(), v.end(), mapped.begin(), f);
    std::sort(mapped.begin(), mapped.end());
    CHECK(a == std::accumulate(mapped.begin(), mapped.end(), 0.0) / 20.0);
  }
}

TEST_CASE("quantile") {
  const auto c = MeasureView::of(GridField(10, -3.0));
  for (double p : {0.0, 0.3, 1.0}) CHECK(quantile(c, p) == -3.0);
  std::mt19937_64 rng(42);
  const auto mv = random_view(rng, 32);
  const auto sorted = oracle::sorted(oracle::to_vec(mv.values()));
  CHECK(quantile(mv, 1.0) == sorted.back());
  CHECK(quantile(mv, 0.0) == sorted.front());
  double prev = -INFINITY;
  for (int i = 0; i <= 200; ++i) {
    const double q = quantile(mv, i / 200.0);
    CHECK(q >= prev);
    prev = q;
  }
  // Grid node lookup: p = 1 - 2 j / M hits X(x_j).
  for (std::size_t j = 0; j <= 16; ++j) CHECK(quantile(mv, 1.0 - 2.0 * j / 32.0) == doctest::Approx(mv.values()[j]));
  CHECK_THROWS_AS(quantile(mv, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(quantile(mv, -0.1), std::invalid_argument);
}

TEST_CASE("w2 basics") {
  const auto a = MeasureView::of(GridField(16, 1.0));
  const auto b = MeasureView::of(GridField(16, -2.5));
  CHECK(w2(a, a) == 0.0);
  CHECK(w2(a, b) == doctest::Approx(3.5));
  CHECK(w2_oracle(a, b, 1000) == doctest::Approx(3.5));
  CHECK(w2_oracle(a, a, 1000) == 0.0);
  CHECK_THROWS_AS(w2(a, MeasureView::of(GridField(8, 0.0))), std::invalid_argument);
  CHECK_THROWS_AS(w2_oracle(a, b, 0), std::invalid_argument);
}

TEST_CASE("w2 is a metric") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_view(rng, 24);
    const auto b = random_view(rng, 24, 2.0);
    const auto c = random_view(rng, 24, 0.5);
    CHECK(w2(a, b) == w2(b, a));
    CHECK(w2(a, b) > 0.0);
    CHECK(w2(a, c) <= w2(a, b) + w2(b, c) + 1e-14);
  }
}

TEST_CASE("oracle at grid resolution equals w2") {
  std::mt19937_64 rng(44);
  for (std::size_t M : {6u, 32u, 256u}) {
    const auto a = random_view(rng, M);
    const auto b = random_view(rng, M);
    CHECK(w2_oracle(a, b, M) == doctest::Approx(w2(a, b)).epsilon(1e-13));
  }
}

TEST_CASE("oracle converges to w2 for smooth fields") {
  const std::size_t M = 512;
  const auto a = MeasureView::of(to_grid(SpectralField({0.0, 1.0, 0.3}), M));
  const auto b = MeasureView::of(to_grid(SpectralField({0.2, 0.5, -0.1, 0.05}), M));
  const double ref = w2(a, b);
  CHECK(w2_oracle(a, b, 100000) == doctest::Approx(ref).epsilon(1e-3));
}

TEST_CASE("monotone coupling beats every permutation for M <= 6") {
  std::mt19937_64 rng(45);
  for (std::size_t M : {4u, 6u}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = random_view(rng, M);
      const auto b = random_view(rng, M);
      const double best = w2(a, b);
      std::vector<std::size_t> perm(M);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      double min_cost = INFINITY;
      do {
        const double c = coupling_cost(a.values(), b.values(), perm);
        CHECK(best <= c + 1e-14);
        min_cost = std::min(min_cost, c);
      } while (std::next_permutation(perm.begin(), perm.end()));
      CHECK(min_cost == doctest::Approx(best).epsilon(1e-14));
    }
  }
  const std::vector<std::size_t> short_perm{0, 1};
  const std::vector<double> v(4, 0.0);
  CHECK_THROWS_AS(coupling_cost(v, v, short_perm), std::invalid_argument);
}
