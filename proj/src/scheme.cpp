#include "rshe/scheme.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

namespace rshe {

void SchemeConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("h: must be a positive finite step");
  if (M < 4 || M % 2 != 0) throw std::invalid_argument("M: must be even and >= 4");
  if (N < 1 || N > M / 2) throw std::invalid_argument("N: must satisfy 1 <= N <= M/2");
  if (noise.N != N) throw std::invalid_argument("noise.N: must equal N");
  noise.validate();
  if (x0.size() != M) throw std::invalid_argument("x0: grid size must equal M");
}

NumericAbort::NumericAbort(std::size_t step, std::uint64_t stream, const std::string& what)
    : std::runtime_error("step " + std::to_string(step) + ", stream " + std::to_string(stream) + ": " + what),
      step_(step),
      stream_(stream) {}

namespace {

GridField finite_grid(std::vector<double> v) {
  double sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw std::domain_error("non-finite value in predraft");
    sq += x * x;
  }
  if (!std::isfinite(sq)) throw std::domain_error("predraft L2 norm overflows");
  return GridField(std::move(v));
}

GridField synthesize_checked(const SpectralField& f, std::size_t M) {
  for (double c : f.coeffs()) {
    if (!std::isfinite(c)) throw std::domain_error("non-finite spectral coefficient");
  }
  auto g = to_grid(f, M);
  return finite_grid({g.values().begin(), g.values().end()});
}

}  // namespace

StepResult step(const CanonicalField& x, const StepDraw& draw, const SchemeConfig& cfg) {
  auto evolved = heat_evolve(to_spectral(x.grid(), cfg.N), cfg.h);
  evolved += convolution_field(draw, cfg.noise);
  GridField predraft = synthesize_checked(evolved, cfg.M);
  return {rearrange(predraft), std::move(predraft)};
}

Trajectory run(const SchemeConfig& cfg, NoiseLedger ledger) {
  cfg.validate();
  if (ledger.draws.size() != cfg.n_steps || ledger.h != cfg.h || ledger.spec.N != cfg.N) {
    throw std::invalid_argument("run: ledger does not match the configuration");
  }
  Trajectory traj{cfg, {}, {}, std::move(ledger)};
  traj.states.reserve(cfg.n_steps + 1);
  traj.predrafts.reserve(cfg.n_steps);
  traj.states.push_back(cfg.x0);
  for (std::size_t n = 0; n < cfg.n_steps; ++n) {
    try {
      auto r = step(traj.states.back(), traj.ledger.draws[n], cfg);
      traj.states.push_back(std::move(r.next));
      traj.predrafts.push_back(std::move(r.predraft));
    } catch (const std::domain_error& e) {
      throw NumericAbort(n, traj.ledger.stream, e.what());
    } catch (const std::invalid_argument& e) {
      throw NumericAbort(n, traj.ledger.stream, e.what());
    }
  }
  return traj;
}

Trajectory run(const SchemeConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  return run(cfg, make_ledger(cfg.noise, cfg.h, cfg.n_steps, stream));
}

GridField y_from_partial(const Trajectory& traj, std::size_t n, double tau, const StepDraw& partial) {
  const auto& cfg = traj.config;
  auto y = heat_evolve(to_spectral(traj.states[n].grid(), cfg.N), tau);
  y += convolution_field(partial, cfg.noise);
  return to_grid(y, cfg.M);
}

namespace {

// Locates t on the step grid; returns (n, tau) with tau in [0, h).
std::pair<std::size_t, double> locate(const Trajectory& traj, double t) {
  const double h = traj.config.h;
  const double T = traj.config.horizon();
  if (!(t >= 0.0 && t <= T * (1.0 + 1e-14))) throw std::invalid_argument("interpolation time outside [0, T]");
  const double r = t / h;
  auto n = static_cast<std::size_t>(std::floor(r));
  double tau = t - static_cast<double>(n) * h;
  // Snap to the nearest grid time within rounding.
  const double nearest = std::round(r);
  if (std::abs(r - nearest) < 1e-12 * std::max(1.0, r)) {
    n = static_cast<std::size_t>(nearest);
    tau = 0.0;
  }
  if (n >= traj.n_steps()) {
    n = traj.n_steps();
    tau = 0.0;
  }
  return {n, tau};
}

}  // namespace

GridField interpolate_y(const Trajectory& traj, double t, PathRng& rng) {
  const auto [n, tau] = locate(traj, t);
  if (tau == 0.0) return traj.states[n].grid();
  const auto pieces = split_step(traj.ledger.draws[n], traj.config.h, tau, rng);
  return y_from_partial(traj, n, tau, pieces.first);
}

GridField interpolate_linear(const Trajectory& traj, double t) {
  const auto [n, tau] = locate(traj, t);
  if (tau == 0.0) return traj.states[n].grid();
  const double w = tau / traj.config.h;
  const auto a = traj.states[n].values();
  const auto b = traj.states[n + 1].values();
  std::vector<double> v(a.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = (1.0 - w) * a[j] + w * b[j];
  return GridField(std::move(v));
}

EtaModes eta_from_trajectory(const Trajectory& traj, EtaQuadrature quadrature) {
  const auto& cfg = traj.config;
  const std::size_t N = cfg.N;
  const std::size_t steps = traj.n_steps();
  const auto lam = spectrum(cfg.noise);
  EtaModes eta{std::vector<std::vector<double>>(steps + 1, std::vector<double>(N + 1, 0.0)), cfg.M};

  std::vector<SpectralField> modes;
  modes.reserve(steps + 1);
  for (const auto& s : traj.states) modes.push_back(to_spectral(s.grid(), N));

  if (quadrature == EtaQuadrature::Exponential) {
    for (std::size_t n = 0; n < steps; ++n) {
      const auto pre = to_spectral(traj.predrafts[n], N);
      for (std::size_t k = 0; k <= N; ++k) {
        eta.eta_hat[n + 1][k] = eta.eta_hat[n][k] + (modes[n + 1][k] - pre[k]);
      }
    }
    return eta;
  }

  std::vector<double> integral(N + 1, 0.0);
  std::vector<double> beta(N + 1, 0.0);
  for (std::size_t n = 0; n < steps; ++n) {
    const auto& draw = traj.ledger.draws[n];
    for (std::size_t k = 0; k <= N; ++k) {
      integral[k] += cfg.h * modes[n][k];
      beta[k] += draw.dbeta[k];
      eta.eta_hat[n + 1][k] =
          modes[n + 1][k] - modes[0][k] + laplacian_rate(k) * integral[k] - lam[k] * beta[k];
    }
  }
  return eta;
}

PairingPath eta_pairing_path(const EtaModes& eta, const SpectralField& u) {
  const std::size_t K = std::min(u.modes(), eta.eta_hat.front().size() - 1);
  PairingPath out;
  out.values.reserve(eta.eta_hat.size());
  for (const auto& row : eta.eta_hat) {
    double s = 0.0;
    for (std::size_t k = 0; k <= K; ++k) s += u[k] * row[k];
    out.values.push_back(s);
  }
  if (eta.M >= 2 * u.modes()) out.u_canonical = is_canonical(to_grid(u, eta.M), 1e-12);
  return out;
}

double largest_downward_violation(const std::vector<double>& path) {
  double worst = 0.0;
  double running = -std::numeric_limits<double>::infinity();
  for (double v : path) {
    running = std::max(running, v);
    worst = std::max(worst, running - v);
  }
  return worst;
}

double eta_orthogonality(const Trajectory& traj, const EtaModes& eta, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eta_orthogonality: eps must be > 0");
  const std::size_t N = traj.config.N;
  std::vector<double> damp(N + 1);
  for (std::size_t k = 0; k <= N; ++k) damp[k] = std::exp(-laplacian_rate(k) * eps);
  double total = 0.0;
  for (std::size_t n = 0; n + 1 < eta.eta_hat.size(); ++n) {
    const auto x = to_spectral(traj.states[n].grid(), N);
    for (std::size_t k = 0; k <= N; ++k) {
      total += damp[k] * x[k] * (eta.eta_hat[n + 1][k] - eta.eta_hat[n][k]);
    }
  }
  return total;
}

CanonicalField constant_field(std::size_t M, double c) { return rearrange(GridField(M, c)); }

CanonicalField cosine_profile(std::size_t M, double c0, double c1) {
  if (c1 < 0.0) throw std::invalid_argument("cosine_profile: c1 must be >= 0");
  std::vector<double> c(2, 0.0);
  c[0] = c0;
  c[1] = c1;
  return CanonicalField::adopt(to_grid(SpectralField(std::move(c)), M), 1e-12);
}

CanonicalField step_profile(std::size_t M, double width) {
  std::vector<double> v(M);
  for (std::size_t j = 0; j < M; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(M);
    const double d = std::min(x, 1.0 - x);
    v[j] = d < 0.5 * width ? 1.0 : 0.0;
  }
  return rearrange(GridField(std::move(v)));
}

CanonicalField mollify(const CanonicalField& x, double eps) {
  const std::size_t M = x.size();
  return rearrange(to_grid(heat_evolve(to_spectral(x.grid()), eps), M));
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const auto& cfg = traj.config;
  const auto old_precision = os.precision(17);
  os << "# rshe trajectory\n"
     << "# h=" << cfg.h << "\n# M=" << cfg.M << "\n# N=" << cfg.N << "\n# lambda=" << cfg.noise.lambda_exponent
     << "\n# multiplier=" << cfg.noise.multiplier << "\n# seed=" << cfg.noise.seed
     << "\n# stream=" << traj.ledger.stream << "\n";
  os << "time";
  for (std::size_t j = 0; j < cfg.M; ++j) os << ",x" << j;
  os << "\n";
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    os << static_cast<double>(n) * cfg.h;
    for (double v : traj.states[n].values()) os << "," << v;
    os << "\n";
  }
  os.precision(old_precision);
}

namespace {

constexpr char kMagic[8] = {'R', 'S', 'H', 'E', 'T', 'R', 'J', '1'};

template <class T>
void put(std::ostream& os, T value) {
  static_assert(sizeof(T) == 8);
  auto bits = std::bit_cast<std::uint64_t>(value);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

template <class T>
T get(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw std::runtime_error("trajectory dump truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_trajectory_binary(std::ostream& os, const Trajectory& traj) {
  const auto& cfg = traj.config;
  os.write(kMagic, sizeof kMagic);
  put(os, cfg.h);
  put(os, static_cast<std::uint64_t>(cfg.M));
  put(os, static_cast<std::uint64_t>(cfg.N));
  put(os, cfg.noise.lambda_exponent);
  put(os, cfg.noise.multiplier);
  put(os, cfg.noise.seed);
  put(os, traj.ledger.stream);
  put(os, static_cast<std::uint64_t>(traj.states.size()));
  for (const auto& s : traj.states)
    for (double v : s.values()) put(os, v);
}

TrajectoryDump read_trajectory_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("not a trajectory dump");
  }
  TrajectoryDump d;
  d.h = get<double>(is);
  d.M = static_cast<std::size_t>(get<std::uint64_t>(is));
  d.N = static_cast<std::size_t>(get<std::uint64_t>(is));
  d.lambda_exponent = get<double>(is);
  d.multiplier = get<double>(is);
  d.seed = get<std::uint64_t>(is);
  d.stream = get<std::uint64_t>(is);
  const auto count = get<std::uint64_t>(is);
  d.states.assign(count, std::vector<double>(d.M));
  for (auto& s : d.states)
    for (auto& v : s) v = get<double>(is);
  return d;
}

}  // namespace rshe
