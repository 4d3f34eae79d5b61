#include "rshe/ito.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

namespace rshe {

double ItoLedger::normalized_residual() const { return residual / (1.0 + std::abs(phi_start)); }

namespace {

struct StepContext {
  std::size_t M;
  std::size_t N;
  std::vector<double> lambda;
  std::vector<double> f1;
};

// Adds the drift terms at y with quadrature weight dt and, when dbeta is
// non-empty, the stochastic term with y as left point.
void add_terms(const StepContext& ctx, const GridField& y, double dt, std::span<const double> dbeta,
               const std::vector<MeanFieldFunction>& phis, std::vector<ItoLedger>& out) {
  const auto v = y.values();
  const auto dx = spectral_derivative_values(to_spectral(y, ctx.N), ctx.M);
  const double inv_m = 1.0 / static_cast<double>(ctx.M);
  std::vector<double> dmu(ctx.M);
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const auto d = phis[i].at(v);
    double grad = 0.0;
    double f1 = 0.0;
    for (std::size_t j = 0; j < ctx.M; ++j) {
      const double w = d.grad_d_mu(v[j]);
      grad += w * dx[j] * dx[j];
      f1 += w * ctx.f1[j];
    }
    out[i].t_grad -= dt * grad * inv_m;
    out[i].t_f1 += 0.5 * dt * f1 * inv_m;
    out[i].t_f2 += 0.5 * dt * f2_contraction(d, v, ctx.lambda);
    if (dbeta.empty()) continue;
    for (std::size_t j = 0; j < ctx.M; ++j) dmu[j] = d.d_mu(v[j]);
    const auto proj = to_spectral(GridField(dmu), ctx.N);
    double stoch = 0.0;
    for (std::size_t k = 0; k <= ctx.N; ++k) stoch += ctx.lambda[k] * proj[k] * dbeta[k];
    out[i].t_stoch += stoch;
  }
}

void check_trajectory(const Trajectory& traj) {
  const auto& cfg = traj.config;
  if (traj.states.size() != traj.n_steps() + 1) throw std::invalid_argument("accumulate: states/predrafts mismatch");
  if (traj.ledger.draws.size() != traj.n_steps()) throw std::invalid_argument("accumulate: ledger length mismatch");
  if (traj.ledger.spec.N != cfg.N || cfg.noise.N != cfg.N) throw std::invalid_argument("accumulate: mode count mismatch");
  for (const auto& s : traj.states) {
    if (s.size() != cfg.M) throw std::invalid_argument("accumulate: grid size mismatch");
  }
  for (const auto& d : traj.ledger.draws) {
    if (d.dbeta.size() != cfg.N + 1) throw std::invalid_argument("accumulate: draw size mismatch");
  }
}

}  // namespace

std::vector<ItoLedger> accumulate_many(const Trajectory& traj, const std::vector<MeanFieldFunction>& phis,
                                       const AccumulateOptions& options) {
  if (traj.states.empty()) throw std::invalid_argument("accumulate: empty trajectory");
  check_trajectory(traj);
  if (options.quadrature != TermQuadrature::LeftPoint) {
    if (options.substeps == 0) throw std::invalid_argument("accumulate: substeps must be >= 1");
    if (!(options.grading >= 1.0) || !std::isfinite(options.grading)) {
      throw std::invalid_argument("accumulate: grading must be >= 1");
    }
  }
  const auto& cfg = traj.config;
  StepContext ctx{cfg.M, cfg.N, spectrum(cfg.noise), {}};
  ctx.f1 = f1_values(ctx.lambda, cfg.M);

  std::vector<ItoLedger> out(phis.size());
  const double h = cfg.h;
  const bool mid = options.quadrature != TermQuadrature::LeftPoint;
  const bool trapezoid = options.quadrature == TermQuadrature::MidStepTrapezoid;
  PathRng bridge(cfg.noise.seed ^ options.bridge_tag, traj.ledger.stream);
  std::vector<double> nodes;
  if (mid) {
    const auto s = static_cast<double>(options.substeps);
    for (std::size_t i = 0; i < options.substeps; ++i) nodes.push_back(h * std::pow(static_cast<double>(i) / s, options.grading));
    nodes.push_back(h);
  }

  for (std::size_t n = 0; n < traj.n_steps(); ++n) {
    const auto& draw = traj.ledger.draws[n];
    if (!mid) {
      add_terms(ctx, traj.states[n].grid(), h, draw.dbeta, phis, out);
      continue;
    }
    StepDraw remaining = draw;
    double remaining_len = h;
    StepDraw partial;
    for (std::size_t i = 0; i < nodes.size() - 1; ++i) {
      const double tau = nodes[i];
      const double len = nodes[i + 1] - nodes[i];
      const GridField y = i == 0 ? traj.states[n].grid() : y_from_partial(traj, n, tau, partial);
      StepDraw piece;
      if (i + 2 < nodes.size()) {
        auto parts = split_step(remaining, remaining_len, len, bridge);
        piece = std::move(parts.first);
        remaining = std::move(parts.second);
        remaining_len = h - nodes[i + 1];
      } else {
        piece = remaining;
      }
      const double prev = i == 0 ? 0.0 : nodes[i] - nodes[i - 1];
      const double w = trapezoid ? 0.5 * (prev + len) : len;
      add_terms(ctx, y, w, piece.dbeta, phis, out);
      partial = i == 0 ? piece : compose_steps(partial, piece, len);
    }
    if (trapezoid) add_terms(ctx, traj.predrafts[n], 0.5 * (nodes.back() - nodes[nodes.size() - 2]), {}, phis, out);
  }

  for (std::size_t i = 0; i < phis.size(); ++i) {
    out[i].phi_start = phis[i].phi(traj.states.front().values());
    out[i].phi_end = phis[i].phi(traj.states.back().values());
    out[i].residual = out[i].recomputed_residual();
  }
  return out;
}

ItoLedger accumulate(const Trajectory& traj, const MeanFieldFunction& phi, const AccumulateOptions& options) {
  return accumulate_many(traj, std::vector<MeanFieldFunction>{phi}, options).front();
}

SchemeConfig StudyConfig::scheme_for(double h) const {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("h: must be > 0");
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("T: must be >= 0");
  const double r = T / h;
  const double steps = std::round(r);
  if (std::abs(r - steps) > 1e-9 * std::max(1.0, r)) throw std::invalid_argument("h: T / h must be an integer");
  SchemeConfig s;
  s.h = h;
  s.n_steps = static_cast<std::size_t>(steps);
  s.M = M;
  s.N = N;
  s.noise = noise;
  s.x0 = x0;
  s.validate();
  return s;
}

void StudyConfig::validate() const {
  if (n_paths < 2) throw std::invalid_argument("n_paths: must be >= 2");
  if (threads == 0) throw std::invalid_argument("threads: must be >= 1");
  if (x0.size() != M) throw std::invalid_argument("x0: grid size must equal M");
  noise.validate();
  if (noise.N != N) throw std::invalid_argument("N: noise and scheme mode counts differ");
}

MeanSe mean_se(const std::vector<double>& values) {
  MeanSe out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.se = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) return;
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

void check_h_list(const std::vector<double>& h_list) {
  if (h_list.empty()) throw std::invalid_argument("h_list: must not be empty");
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    if (!(h_list[i] > 0.0)) throw std::invalid_argument("h_list: entries must be > 0");
    if (i > 0 && !(h_list[i] < h_list[i - 1])) throw std::invalid_argument("h_list: must be strictly decreasing");
  }
}

StudyReport report_base(const StudyConfig& cfg, std::string kind, const std::vector<double>& h_list) {
  StudyReport r;
  r.kind = std::move(kind);
  r.seed = cfg.noise.seed;
  r.n_paths = cfg.n_paths;
  r.h_list = h_list;
  return r;
}

}  // namespace

std::vector<StudyReport> mc_residual_study(const StudyConfig& cfg, const std::vector<MeanFieldFunction>& phis,
                                           const std::vector<double>& h_list) {
  cfg.validate();
  check_h_list(h_list);
  std::vector<StudyReport> reports;
  for (const auto& phi : phis) {
    reports.push_back(report_base(cfg, "ito-verify", h_list));
    reports.back().phi = phi.name();
  }
  for (std::size_t hi = 0; hi < h_list.size(); ++hi) {
    const auto scfg = cfg.scheme_for(h_list[hi]);
    std::vector<std::vector<ItoLedger>> ledgers(cfg.n_paths);
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t p) {
      const auto traj = run(scfg, path_stream(hi, p));
      ledgers[p] = accumulate_many(traj, phis, cfg.accumulate);
    });
    for (std::size_t i = 0; i < phis.size(); ++i) {
      std::vector<double> res, absr, norm, tg, ts, tf1, tf2;
      for (std::size_t p = 0; p < cfg.n_paths; ++p) {
        const auto& l = ledgers[p][i];
        reports[i].rows.push_back({h_list[hi], p, path_stream(hi, p), l});
        res.push_back(l.residual);
        absr.push_back(std::abs(l.residual));
        norm.push_back(l.normalized_residual());
        tg.push_back(l.t_grad);
        ts.push_back(l.t_stoch);
        tf1.push_back(l.t_f1);
        tf2.push_back(l.t_f2);
      }
      ResidualStats s;
      s.h = h_list[hi];
      s.n_paths = cfg.n_paths;
      s.residual = mean_se(res);
      s.abs_residual = mean_se(absr);
      s.normalized_residual = mean_se(norm);
      s.mean_t_grad = mean_se(tg).mean;
      s.mean_t_stoch = mean_se(ts).mean;
      s.mean_t_f1 = mean_se(tf1).mean;
      s.mean_t_f2 = mean_se(tf2).mean;
      reports[i].residuals.push_back(s);
    }
  }
  return reports;
}

StudyReport mc_residual_study(const StudyConfig& cfg, const MeanFieldFunction& phi, const std::vector<double>& h_list) {
  return mc_residual_study(cfg, std::vector<MeanFieldFunction>{phi}, h_list).front();
}

StudyReport moment_study(const StudyConfig& cfg, const std::vector<double>& h_list, const std::vector<double>& p_list) {
  cfg.validate();
  check_h_list(h_list);
  if (p_list.empty()) throw std::invalid_argument("p_list: must not be empty");
  for (double p : p_list) {
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("p_list: entries must be > 0");
  }
  if (!std::isfinite(grad_sq_norm(to_spectral(cfg.x0.grid(), cfg.N)))) {
    throw std::invalid_argument("x0: needs finite H^1 norm");
  }
  auto report = report_base(cfg, "moments", h_list);
  for (std::size_t hi = 0; hi < h_list.size(); ++hi) {
    const auto scfg = cfg.scheme_for(h_list[hi]);
    std::vector<std::vector<double>> grad(cfg.n_paths), l2(cfg.n_paths);
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t p) {
      const auto traj = run(scfg, path_stream(hi, p));
      for (const auto& s : traj.states) {
        grad[p].push_back(grad_sq_norm(to_spectral(s.grid(), cfg.N)));
        const double n = s.grid().l2_norm();
        l2[p].push_back(n * n);
      }
    });
    const std::size_t steps = scfg.n_steps + 1;
    for (double pw : p_list) {
      MomentStats m;
      m.h = h_list[hi];
      m.p = pw;
      for (std::size_t n = 0; n < steps; ++n) {
        double mean = 0.0;
        for (std::size_t p = 0; p < cfg.n_paths; ++p) mean += std::pow(grad[p][n], pw);
        m.max_mean_grad = std::max(m.max_mean_grad, mean / static_cast<double>(cfg.n_paths));
      }
      for (std::size_t p = 0; p < cfg.n_paths; ++p) {
        double mx = 0.0;
        for (double v : l2[p]) mx = std::max(mx, std::pow(v, pw));
        m.mean_max_l2 += mx;
      }
      m.mean_max_l2 /= static_cast<double>(cfg.n_paths);
      report.moments.push_back(m);
    }
  }
  return report;
}

StudyReport eta_study(const StudyConfig& cfg, const std::vector<double>& h_list, const std::vector<double>& eps_list) {
  cfg.validate();
  check_h_list(h_list);
  for (double e : eps_list) {
    if (!(e > 0.0)) throw std::invalid_argument("eps_list: entries must be > 0");
  }
  auto report = report_base(cfg, "eta-check", h_list);
  std::vector<double> u1(cfg.N + 1, 0.0), u2(cfg.N + 1, 0.0);
  u1[1] = 1.0;
  u2[0] = 1.0;
  u2[1] = 0.5;
  const SpectralField e1(u1), mixed(u2);
  for (std::size_t hi = 0; hi < h_list.size(); ++hi) {
    const auto scfg = cfg.scheme_for(h_list[hi]);
    std::vector<double> v1(cfg.n_paths), v2(cfg.n_paths);
    std::vector<std::vector<double>> orth(eps_list.size(), std::vector<double>(cfg.n_paths));
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t p) {
      const auto traj = run(scfg, path_stream(hi, p));
      const auto eta = eta_from_trajectory(traj, cfg.eta_quadrature);
      v1[p] = largest_downward_violation(eta_pairing_path(eta, e1).values);
      v2[p] = largest_downward_violation(eta_pairing_path(eta, mixed).values);
      for (std::size_t e = 0; e < eps_list.size(); ++e) orth[e][p] = eta_orthogonality(traj, eta, eps_list[e]);
    });
    EtaStats s;
    s.h = h_list[hi];
    s.violation_e1 = mean_se(v1);
    s.violation_mixed = mean_se(v2);
    s.eps = eps_list;
    for (const auto& o : orth) s.orthogonality.push_back(mean_se(o));
    report.eta.push_back(s);
  }
  return report;
}

}  // namespace rshe
