#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "rshe/meanfield.hpp"
#include "rshe/scheme.hpp"

using namespace rshe;

namespace {

std::vector<double> shifted(const GridField& X, std::size_t k, double e1, std::size_t j = 0, double e2 = 0.0) {
  const std::size_t M = X.size();
  std::vector<double> v(M);
  for (std::size_t i = 0; i < M; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(M);
    v[i] = X[i] + e1 * oracle::e_m(k, x) + e2 * oracle::e_m(j, x);
  }
  return v;
}

double fd_first(const MeanFieldFunction& phi, const GridField& X, std::size_t k, double eps) {
  return (phi.phi(shifted(X, k, eps)) - phi.phi(shifted(X, k, -eps))) / (2.0 * eps);
}

double fd_second(const MeanFieldFunction& phi, const GridField& X, std::size_t k, std::size_t j, double eps) {
  return (phi.phi(shifted(X, k, eps, j, eps)) - phi.phi(shifted(X, k, eps, j, -eps)) -
          phi.phi(shifted(X, k, -eps, j, eps)) + phi.phi(shifted(X, k, -eps, j, -eps))) /
         (4.0 * eps * eps);
}

std::vector<MeanFieldFunction> all_entries() {
  std::vector<MeanFieldFunction> out;
  for (const auto& n : catalog_names()) out.push_back(catalog_lookup(n));
  out.push_back(make_linear(LinearBase::Sin, 2.5));
  out.push_back(make_tanh_of_sin(0.7));
  out.push_back(make_first_moment());
  return out;
}

}  // namespace

TEST_CASE("catalog lookup") {
  const auto names = catalog_names();
  CHECK(names.size() == 4);
  for (const auto& n : names) CHECK(catalog_lookup(n).name() == n);
  CHECK(catalog_lookup("linear_cos_a2.5").name() == "linear_cos_a2.5");
  CHECK(catalog_lookup("tanh_of_sin_a0.5").name() == "tanh_of_sin_a0.5");
  CHECK(catalog_lookup("first_moment").has_bounded_derivatives());
  CHECK_THROWS_AS(catalog_lookup("second_moment"), std::invalid_argument);
  CHECK_FALSE(catalog_lookup("second_moment", true).has_bounded_derivatives());
  CHECK_THROWS_AS(catalog_lookup("bogus"), std::invalid_argument);
  CHECK_THROWS_AS(catalog_lookup("linear_sin_a"), std::invalid_argument);
  CHECK_THROWS_AS(catalog_lookup("linear_sin_axyz"), std::invalid_argument);
}

TEST_CASE("phi at Dirac masses") {
  const auto zero = MeasureView::of(GridField(16, 0.0));
  CHECK(eval_phi(catalog_lookup("linear_sin_a1"), zero) == 0.0);
  CHECK(eval_phi(catalog_lookup("tanh_of_sin"), zero) == 0.0);
  CHECK(eval_phi(catalog_lookup("linear_cos_a1"), zero) == 1.0);
  const auto c = MeasureView::of(GridField(16, 1.3));
  CHECK(eval_phi(catalog_lookup("interaction_cos"), c) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(eval_phi(catalog_lookup("linear_sin_a1"), c) == doctest::Approx(std::sin(1.3)));
  CHECK(eval_phi(make_first_moment(), c) == doctest::Approx(1.3));
  CHECK(eval_phi(make_second_moment(), c) == doctest::Approx(1.69));
}

TEST_CASE("interaction phi matches the double sum") {
  std::mt19937_64 rng(51);
  const auto v = oracle::gaussian_values(rng, 24);
  double s = 0.0;
  for (double y : v)
    for (double z : v) s += std::cos(y - z);
  CHECK(catalog_lookup("interaction_cos").phi(v) == doctest::Approx(s / (24.0 * 24.0)).epsilon(1e-13));
}

TEST_CASE("phi is invariant under rearrangement") {
  std::mt19937_64 rng(52);
  for (const auto& phi : all_entries()) {
    const GridField f(oracle::gaussian_values(rng, 32));
    CHECK(phi.phi(f.values()) == phi.phi(rearrange(f).values()));
  }
}

TEST_CASE("closed-form derivatives match finite differences") {
  std::mt19937_64 rng(53);
  for (const auto& phi : all_entries()) {
    for (int trial = 0; trial < 3; ++trial) {
      const GridField X(oracle::symmetric_values(rng, 64, 10));
      for (std::size_t k : {0u, 1u, 3u, 8u}) {
        const double exact = directional_derivative(phi, X, k);
        CHECK(exact == doctest::Approx(fd_first(phi, X, k, 1e-4)).epsilon(1e-6).scale(1.0));
        for (std::size_t j : {0u, 2u, 8u}) {
          const double second = second_directional_derivative(phi, X, k, j);
          INFO(phi.name() << " k=" << k << " j=" << j);
          CHECK(second == doctest::Approx(fd_second(phi, X, k, j, 1e-3)).epsilon(1e-5).scale(1.0));
          CHECK(second == doctest::Approx(second_directional_derivative(phi, X, j, k)).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("linear entries: simple derivative values") {
  const auto phi = catalog_lookup("linear_sin_a1");
  const GridField c(32, 0.4);
  CHECK(directional_derivative(phi, c, 0) == doctest::Approx(std::cos(0.4)));
  for (std::size_t k = 1; k < 6; ++k) CHECK(std::abs(directional_derivative(phi, c, k)) < 1e-14);
  CHECK(second_directional_derivative(phi, c, 0, 0) == doctest::Approx(-std::sin(0.4)));
  const auto m1 = make_first_moment();
  std::mt19937_64 rng(54);
  const GridField X(oracle::gaussian_values(rng, 32));
  CHECK(directional_derivative(m1, X, 0) == doctest::Approx(1.0));
  CHECK(phi.at(X.values()).d2_vanishes);
}

TEST_CASE("second Lions derivative is symmetric and bounded") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (const auto& name : catalog_names()) {
    const auto phi = catalog_lookup(name);
    for (int trial = 0; trial < 10; ++trial) {
      const auto v = oracle::gaussian_values(rng, 16, 2.0);
      const auto d = phi.at(v);
      for (int s = 0; s < 20; ++s) {
        const double y = u(rng), z = u(rng);
        CHECK(d.d2_mu(y, z) == doctest::Approx(d.d2_mu(z, y)).epsilon(1e-14));
        CHECK(std::abs(d.d_mu(y)) <= phi.derivative_bound());
        CHECK(std::abs(d.grad_d_mu(y)) <= phi.derivative_bound());
        CHECK(std::abs(d.d2_mu(y, z)) <= phi.derivative_bound());
        if (!d.d2_terms.empty()) {
          double sum = 0.0;
          for (const auto& t : d.d2_terms) sum += t.coef * t.p(y) * t.q(z);
          CHECK(sum == doctest::Approx(d.d2_mu(y, z)).epsilon(1e-12).scale(1e-14));
        }
      }
    }
  }
}

TEST_CASE("interaction derivatives against direct sums") {
  std::mt19937_64 rng(56);
  const auto v = oracle::gaussian_values(rng, 20);
  const auto d = catalog_lookup("interaction_cos").at(v);
  for (double y : {-1.0, 0.3, 2.0}) {
    double dm = 0.0, gm = 0.0;
    for (double z : v) {
      dm += -2.0 * std::sin(y - z);
      gm += -2.0 * std::cos(y - z);
    }
    CHECK(d.d_mu(y) == doctest::Approx(dm / 20.0).epsilon(1e-12).scale(1e-14));
    CHECK(d.grad_d_mu(y) == doctest::Approx(gm / 20.0).epsilon(1e-12).scale(1e-14));
    CHECK(d.d2_mu(y, 0.5) == doctest::Approx(2.0 * std::cos(y - 0.5)));
  }
}

TEST_CASE("F1 integrates to the squared spectrum") {
  NoiseSpec s{0.75, 16, 1, 1.0};
  const auto lam = spectrum(s);
  const auto f1 = f1_values(lam, 64);
  double mean = 0.0;
  for (double x : f1) mean += x;
  mean /= 64.0;
  double sum = 0.0;
  for (double l : lam) sum += l * l;
  CHECK(mean == doctest::Approx(sum).epsilon(1e-13));
}

TEST_CASE("separable and dense F2 contractions agree") {
  std::mt19937_64 rng(57);
  NoiseSpec s{0.75, 16, 1, 1.0};
  const auto lam = spectrum(s);
  for (const auto& name : {"tanh_of_sin", "interaction_cos"}) {
    const auto phi = catalog_lookup(name);
    const auto X = rearrange(GridField(oracle::symmetric_values(rng, 32, 8)));
    const auto d = phi.at(X.values());
    REQUIRE_FALSE(d.d2_terms.empty());
    const double fast = f2_contraction(d, X.values(), lam);
    const double dense = f2_contraction(d, X.values(), lam, true);
    CHECK(fast == doctest::Approx(dense).epsilon(1e-11).scale(1e-14));
  }
  CHECK(f2_contraction(catalog_lookup("linear_cos_a1").at(std::vector<double>(8, 0.0)), std::vector<double>(8, 0.0),
                       lam) == 0.0);
}

TEST_CASE("generator at a constant field") {
  // N < M / 2: every e_k^2 then averages to 1 on the grid.
  NoiseSpec s{0.75, 16, 1, 1.0};
  const auto lam = spectrum(s);
  double sum = 0.0;
  for (double l : lam) sum += l * l;
  const double c = 0.6;
  const auto X = constant_field(64, c);
  for (const auto& name : catalog_names()) {
    const auto phi = catalog_lookup(name);
    const auto d = phi.at(X.values());
    const double expect = 0.5 * d.grad_d_mu(c) * sum + 0.5 * d.d2_mu(c, c) * lam[0] * lam[0];
    const auto g = generator_terms(phi, X, lam);
    CHECK(g.gradient == 0.0);
    CHECK(g.total() == doctest::Approx(expect).epsilon(1e-12).scale(1e-14));
    CHECK(generator(phi, X, lam) == g.total());
  }
}

TEST_CASE("first moment is harmonic for the generator") {
  NoiseSpec s{0.75, 32, 1, 1.0};
  const auto lam = spectrum(s);
  std::mt19937_64 rng(58);
  const auto X = rearrange(GridField(oracle::symmetric_values(rng, 64, 10)));
  const auto g = generator_terms(make_first_moment(), X, lam);
  CHECK(g.gradient == 0.0);
  CHECK(g.f1 == 0.0);
  CHECK(g.f2 == 0.0);
}

TEST_CASE("generator gradient term against a direct sum") {
  NoiseSpec s{0.75, 16, 1, 1.0};
  const auto lam = spectrum(s);
  const auto phi = catalog_lookup("linear_sin_a1");
  const std::size_t M = 64;
  const SpectralField c({0.2, 0.8, 0.1});
  const auto X = rearrange(to_grid(c, M));
  const auto g = generator_terms(phi, X, lam);
  double grad = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    const double x = static_cast<double>(j) / M;
    const double dx = -2.0 * std::numbers::pi * std::numbers::sqrt2 *
                      (0.8 * std::sin(2.0 * std::numbers::pi * x) + 2.0 * 0.1 * std::sin(4.0 * std::numbers::pi * x));
    grad -= -std::sin(X[j]) * dx * dx;
  }
  CHECK(g.gradient == doctest::Approx(grad / M).epsilon(1e-11));
}
