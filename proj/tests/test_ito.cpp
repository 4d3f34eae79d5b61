#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "rshe/ito.hpp"
#include "rshe/report.hpp"

using namespace rshe;

namespace {

SchemeConfig small_scheme(double multiplier, double h = 1.0 / 32.0, double T = 0.25) {
  SchemeConfig cfg;
  cfg.h = h;
  cfg.n_steps = static_cast<std::size_t>(std::lround(T / h));
  cfg.M = 64;
  cfg.N = 32;
  cfg.noise = NoiseSpec{0.75, 32, 11, multiplier};
  cfg.x0 = cosine_profile(64, 0.5, 0.3);
  return cfg;
}

StudyConfig small_study(double multiplier = 1.0) {
  StudyConfig s;
  s.M = 32;
  s.N = 16;
  s.noise = NoiseSpec{0.75, 16, 5, multiplier};
  s.T = 0.125;
  s.x0 = cosine_profile(32, 0.5, 0.3);
  s.n_paths = 6;
  return s;
}

bool same(const ItoLedger& a, const ItoLedger& b) {
  return a.t_grad == b.t_grad && a.t_stoch == b.t_stoch && a.t_f1 == b.t_f1 && a.t_f2 == b.t_f2 &&
         a.phi_start == b.phi_start && a.phi_end == b.phi_end && a.residual == b.residual;
}

}  // namespace

TEST_CASE("ledger identity and normalization") {
  const auto traj = run(small_scheme(1.0), 1);
  for (const auto& name : catalog_names()) {
    const auto l = accumulate(traj, catalog_lookup(name));
    CHECK(l.residual == l.recomputed_residual());
    CHECK(l.normalized_residual() == l.residual / (1.0 + std::abs(l.phi_start)));
    CHECK(l.phi_start == catalog_lookup(name).phi(traj.states.front().values()));
    CHECK(l.phi_end == catalog_lookup(name).phi(traj.states.back().values()));
  }
}

TEST_CASE("empty trajectory gives an all-zero ledger") {
  const auto traj = run(small_scheme(1.0, 1.0 / 32.0, 0.0));
  const auto l = accumulate(traj, catalog_lookup("tanh_of_sin"));
  CHECK(l.t_grad == 0.0);
  CHECK(l.t_stoch == 0.0);
  CHECK(l.t_f1 == 0.0);
  CHECK(l.t_f2 == 0.0);
  CHECK(l.residual == 0.0);
}

TEST_CASE("linear entries have no F2 term") {
  const auto traj = run(small_scheme(1.0), 2);
  CHECK(accumulate(traj, catalog_lookup("linear_sin_a1")).t_f2 == 0.0);
  CHECK(accumulate(traj, catalog_lookup("linear_cos_a1")).t_f2 == 0.0);
}

TEST_CASE("first moment only sees the mean mode") {
  const auto traj = run(small_scheme(1.0), 3);
  const auto l = accumulate(traj, make_first_moment());
  CHECK(l.t_grad == 0.0);
  CHECK(l.t_f1 == 0.0);
  CHECK(l.t_f2 == 0.0);
  double beta0 = 0.0;
  for (const auto& d : traj.ledger.draws) beta0 += d.dbeta[0];
  CHECK(l.t_stoch == doctest::Approx(beta0).epsilon(1e-12));
}

TEST_CASE("left-point terms against a direct evaluation") {
  const auto traj = run(small_scheme(1.0), 4);
  const auto phi = catalog_lookup("interaction_cos");
  const auto lam = spectrum(traj.config.noise);
  double grad = 0.0, f1 = 0.0, f2 = 0.0, stoch = 0.0;
  for (std::size_t n = 0; n < traj.n_steps(); ++n) {
    const auto g = generator_terms(phi, traj.states[n], lam);
    grad += traj.config.h * g.gradient;
    f1 += traj.config.h * g.f1;
    f2 += traj.config.h * g.f2;
    for (std::size_t k = 0; k <= traj.config.N; ++k)
      stoch += lam[k] * directional_derivative(phi, traj.states[n].grid(), k) * traj.ledger.draws[n].dbeta[k];
  }
  const auto l = accumulate(traj, phi);
  CHECK(l.t_grad == doctest::Approx(grad).epsilon(1e-11));
  CHECK(l.t_f1 == doctest::Approx(f1).epsilon(1e-11));
  CHECK(l.t_f2 == doctest::Approx(f2).epsilon(1e-11));
  CHECK(l.t_stoch == doctest::Approx(stoch).epsilon(1e-11));
}

TEST_CASE("replay reproduces the ledger bit-exactly") {
  const auto cfg = small_scheme(1.0);
  const auto traj = run(cfg, 5);
  const auto phi = catalog_lookup("tanh_of_sin");
  const auto a = accumulate(traj, phi);
  const auto b = accumulate(run(cfg, ledger_from_json(ledger_to_json(traj.ledger))), phi);
  CHECK(same(a, b));
  AccumulateOptions mid{TermQuadrature::MidStepTrapezoid, 4};
  CHECK(same(accumulate(traj, phi, mid), accumulate(traj, phi, mid)));
}

TEST_CASE("accumulate_many agrees with single accumulation") {
  const auto traj = run(small_scheme(1.0), 6);
  std::vector<MeanFieldFunction> phis;
  for (const auto& n : catalog_names()) phis.push_back(catalog_lookup(n));
  const auto many = accumulate_many(traj, phis);
  for (std::size_t i = 0; i < phis.size(); ++i) CHECK(same(many[i], accumulate(traj, phis[i])));
}

TEST_CASE("endpoints are invariant under grid permutations of the states") {
  const auto traj = run(small_scheme(1.0), 7);
  std::mt19937_64 rng(7);
  for (const auto& name : catalog_names()) {
    const auto phi = catalog_lookup(name);
    auto v = oracle::to_vec(traj.states.back().values());
    const double ref = phi.phi(v);
    std::shuffle(v.begin(), v.end(), rng);
    CHECK(phi.phi(v) == ref);
  }
}

TEST_CASE("zero noise: only the gradient term survives and the residual is O(h)") {
  const auto phi = catalog_lookup("tanh_of_sin");
  double prev = 0.0;
  for (double h : {1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0}) {
    const auto l = accumulate(run(small_scheme(0.0, h)), phi);
    CHECK(l.t_stoch == 0.0);
    CHECK(l.t_f1 == 0.0);
    CHECK(l.t_f2 == 0.0);
    CHECK(std::abs(l.residual) <= 4.0 * phi.derivative_bound() * h);
    if (prev > 0.0) CHECK(prev / std::abs(l.residual) == doctest::Approx(2.0).epsilon(0.2));
    prev = std::abs(l.residual);
  }
}

TEST_CASE("F1 truncation respects the spectral tail") {
  const auto traj = run(small_scheme(1.0), 8);
  const auto phi = catalog_lookup("linear_sin_a1");
  NoiseSpec lo = traj.config.noise;
  lo.N = 8;
  NoiseSpec hi = traj.config.noise;
  hi.N = 16;
  double a = 0.0, b = 0.0;
  for (std::size_t n = 0; n < traj.n_steps(); ++n) {
    a += traj.config.h * generator_terms(phi, traj.states[n], spectrum(lo)).f1;
    b += traj.config.h * generator_terms(phi, traj.states[n], spectrum(hi)).f1;
  }
  double tail = 0.0;
  for (std::size_t k = 9; k <= 16; ++k) tail += std::pow(static_cast<double>(k), -1.5);
  CHECK(std::abs(a - b) <= phi.derivative_bound() * traj.config.horizon() * tail);
  CHECK(std::abs(a - b) > 0.0);
}

TEST_CASE("one sub-step reproduces the left-point quadrature") {
  const auto traj = run(small_scheme(1.0), 9);
  const auto phi = catalog_lookup("interaction_cos");
  const auto left = accumulate(traj, phi);
  const auto one = accumulate(traj, phi, {TermQuadrature::MidStep, 1});
  CHECK(same(left, one));
  const auto trap = accumulate(traj, phi, {TermQuadrature::MidStepTrapezoid, 1});
  CHECK(trap.t_stoch == left.t_stoch);
  CHECK(trap.residual == trap.recomputed_residual());
  CHECK_THROWS_AS(accumulate(traj, phi, {TermQuadrature::MidStep, 0}), std::invalid_argument);
  CHECK_THROWS_AS(accumulate(traj, phi, {TermQuadrature::MidStep, 2, 0.5}), std::invalid_argument);
}

TEST_CASE("sub-stepped quadrature under zero noise follows the heat flow closely") {
  const auto traj = run(small_scheme(0.0, 1.0 / 16.0));
  const auto phi = catalog_lookup("linear_sin_a1");
  const auto left = accumulate(traj, phi);
  const auto fine = accumulate(traj, phi, {TermQuadrature::MidStepTrapezoid, 16});
  CHECK(std::abs(fine.residual) < 0.05 * std::abs(left.residual));
}

TEST_CASE("accumulate rejects inconsistent trajectories") {
  auto traj = run(small_scheme(1.0), 10);
  traj.ledger.draws.pop_back();
  CHECK_THROWS_AS(accumulate(traj, catalog_lookup("linear_sin_a1")), std::invalid_argument);
  Trajectory empty;
  CHECK_THROWS_AS(accumulate(empty, catalog_lookup("linear_sin_a1")), std::invalid_argument);
}

TEST_CASE("mean and standard error") {
  const auto m = mean_se({1.0, 2.0, 3.0, 4.0});
  CHECK(m.mean == 2.5);
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(mean_se({}).mean == 0.0);
  CHECK(mean_se({7.0}).se == 0.0);
}

TEST_CASE("parallel_for covers every index and rethrows the lowest failure") {
  for (std::size_t threads : {1u, 3u}) {
    std::vector<int> hits(50, 0);
    parallel_for(50, threads, [&](std::size_t i) { hits[i]++; });
    CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 50);
    try {
      parallel_for(20, threads, [](std::size_t i) {
        if (i == 7 || i == 13) throw std::runtime_error("fail " + std::to_string(i));
      });
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "fail 7");
    }
  }
}

TEST_CASE("study configuration validation") {
  auto s = small_study();
  CHECK_NOTHROW(s.validate());
  s.n_paths = 1;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("n_paths"), std::invalid_argument);
  s = small_study();
  s.threads = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = small_study();
  CHECK_THROWS_WITH_AS(s.scheme_for(0.03), doctest::Contains("integer"), std::invalid_argument);
  CHECK(s.scheme_for(1.0 / 64.0).n_steps == 8);
  const auto phi = catalog_lookup("linear_sin_a1");
  CHECK_THROWS_AS(mc_residual_study(s, phi, {}), std::invalid_argument);
  CHECK_THROWS_AS(mc_residual_study(s, phi, {1.0 / 32.0, 1.0 / 16.0}), std::invalid_argument);
  CHECK_THROWS_AS(moment_study(s, {1.0 / 16.0}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(eta_study(s, {1.0 / 16.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("residual study is deterministic and thread independent") {
  auto s = small_study();
  const std::vector<double> hs{1.0 / 16.0, 1.0 / 32.0};
  const auto phi = catalog_lookup("tanh_of_sin");
  const auto a = mc_residual_study(s, phi, hs);
  s.threads = 3;
  const auto b = mc_residual_study(s, phi, hs);
  REQUIRE(a.rows.size() == 12);
  REQUIRE(a.residuals.size() == 2);
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(same(a.rows[i].ledger, b.rows[i].ledger));
  CHECK(a.kind == "ito-verify");
  CHECK(a.phi == "tanh_of_sin");
  CHECK(a.seed == 5);
  CHECK(a.rows[7].stream == path_stream(1, 1));

  std::vector<double> res;
  for (std::size_t p = 0; p < 6; ++p) res.push_back(a.rows[p].ledger.residual);
  CHECK(a.residuals[0].residual.mean == mean_se(res).mean);

  // Each row is the ledger of an independently rerun path.
  const auto traj = run(s.scheme_for(1.0 / 32.0), path_stream(1, 4));
  CHECK(same(accumulate(traj, phi), a.rows[10].ledger));
}

TEST_CASE("moment study") {
  auto s = small_study(0.0);
  const auto quiet = moment_study(s, {1.0 / 16.0, 1.0 / 32.0}, {1.0, 2.0});
  REQUIRE(quiet.moments.size() == 4);
  const double g0 = grad_sq_norm(to_spectral(s.x0.grid(), s.N));
  CHECK(quiet.moments[0].max_mean_grad == doctest::Approx(g0).epsilon(1e-12));
  CHECK(quiet.moments[1].max_mean_grad == doctest::Approx(g0 * g0).epsilon(1e-12));

  s = small_study(1.0);
  const auto noisy = moment_study(s, {1.0 / 16.0}, {1.0, 2.0});
  REQUIRE(noisy.moments.size() == 2);
  // Equality is possible: the maximum can sit at the deterministic x0.
  CHECK(noisy.moments[0].max_mean_grad * noisy.moments[0].max_mean_grad <= noisy.moments[1].max_mean_grad * (1 + 1e-12));
  CHECK(noisy.moments[0].mean_max_l2 * noisy.moments[0].mean_max_l2 <= noisy.moments[1].mean_max_l2 * (1 + 1e-12));
  CHECK(noisy.kind == "moments");
}

TEST_CASE("eta study") {
  auto s = small_study(0.0);
  const auto quiet = eta_study(s, {1.0 / 16.0, 1.0 / 32.0}, {0.1, 0.01});
  REQUIRE(quiet.eta.size() == 2);
  for (const auto& e : quiet.eta) {
    CHECK(e.violation_e1.mean <= 10.0 * e.h);
    CHECK(e.violation_mixed.mean <= 10.0 * e.h);
    for (const auto& o : e.orthogonality) CHECK(std::abs(o.mean) <= 10.0 * e.h);
  }
  s = small_study(1.0);
  const auto noisy = eta_study(s, {1.0 / 16.0}, {0.1});
  CHECK(noisy.eta[0].violation_e1.mean >= 0.0);
  CHECK(noisy.kind == "eta-check");
}

TEST_CASE("report serialization") {
  auto s = small_study();
  const auto reports = mc_residual_study(s, std::vector<MeanFieldFunction>{catalog_lookup("linear_sin_a1")},
                                         {1.0 / 16.0});
  const Meta meta{{"command", "ito-verify"}, {"version", kVersion}};
  const auto json = reports_to_json(reports, meta);
  CHECK(json.find("\"meta\"") != std::string::npos);
  CHECK(json.find("\"version\": \"1.0.0\"") != std::string::npos);
  CHECK(json == reports_to_json(reports, meta));

  std::ostringstream rows, summary;
  write_rows_csv(rows, reports, meta);
  write_summary_csv(summary, reports, meta);
  CHECK(rows.str().rfind("# command=ito-verify\n# version=1.0.0\nh,path,stream,phi,t_grad", 0) == 0);
  std::size_t lines = 0;
  for (char c : rows.str()) lines += c == '\n';
  CHECK(lines == 2 + 1 + 6);
  CHECK(summary.str().find("kind,phi,h,statistic,value\n") != std::string::npos);
  CHECK(summary.str().find("ito-verify,linear_sin_a1,0.0625,mean_abs_residual,") != std::string::npos);
  CHECK(format_double(0.1) == "0.10000000000000001");
}
