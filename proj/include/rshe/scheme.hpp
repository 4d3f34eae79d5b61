#pragma once

// Rearrangement time-stepping:
//   X_{n+1} = ( e^{h Delta} X_n + int_{nh}^{(n+1)h} e^{((n+1)h - s) Delta} dW_s )^*
// plus its interpolants and reconstruction of the reflection term eta.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "rshe/noise.hpp"
#include "rshe/rearrange.hpp"
#include "rshe/spectral.hpp"

namespace rshe {

struct SchemeConfig {
  double h = 1.0 / 64.0;
  std::size_t n_steps = 16;
  std::size_t M = 256;
  std::size_t N = 128;
  NoiseSpec noise;
  CanonicalField x0;

  double horizon() const { return h * static_cast<double>(n_steps); }
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Raised when a step produces non-finite values.
class NumericAbort : public std::runtime_error {
 public:
  NumericAbort(std::size_t step, std::uint64_t stream, const std::string& what);
  std::size_t step() const { return step_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::size_t step_;
  std::uint64_t stream_;
};

struct Trajectory {
  SchemeConfig config;
  std::vector<CanonicalField> states;
  /// predrafts[n] = e^{h Delta} X_n + stochastic convolution, before rearranging.
  std::vector<GridField> predrafts;
  NoiseLedger ledger;

  std::size_t n_steps() const { return predrafts.size(); }
};

struct StepResult {
  CanonicalField next;
  GridField predraft;
};

StepResult step(const CanonicalField& x, const StepDraw& draw, const SchemeConfig& cfg);

/// Runs the scheme against a prerecorded ledger (must match h, N and n_steps).
Trajectory run(const SchemeConfig& cfg, NoiseLedger ledger);
/// Runs with a fresh ledger drawn from (cfg.noise.seed, stream).
Trajectory run(const SchemeConfig& cfg, std::uint64_t stream = 0);

/// Y^h_t. At grid times returns states[n]; inside a step samples the bridge of
/// the stochastic convolution conditioned on the recorded draw. Rejects t outside [0, T].
GridField interpolate_y(const Trajectory& traj, double t, PathRng& rng);
/// Y at tau in [0, h] after X_n, given the noise accumulated over [nh, nh + tau].
GridField y_from_partial(const Trajectory& traj, std::size_t n, double tau, const StepDraw& partial);

/// Piecewise-linear interpolant between consecutive states.
GridField interpolate_linear(const Trajectory& traj, double t);

enum class EtaQuadrature {
  /// Weak form with left-point time integral of <X, Delta e_k>.
  LeftPoint,
  /// Mild form: increments are the rearrangement corrections X_{n+1} - predraft_n.
  Exponential,
};

struct EtaModes {
  /// eta_hat[n][k] = <eta_{t_n}, e_k>, eta_hat[0] = 0.
  std::vector<std::vector<double>> eta_hat;
  std::size_t M = 0;
};

EtaModes eta_from_trajectory(const Trajectory& traj, EtaQuadrature quadrature = EtaQuadrature::LeftPoint);

struct PairingPath {
  std::vector<double> values;
  /// False when u's grid form is not canonical: monotonicity is then not expected.
  bool u_canonical = true;
};

/// t_n -> sum_k u_k eta_k(t_n).
PairingPath eta_pairing_path(const EtaModes& eta, const SpectralField& u);

/// max over n of (running max up to n) - value at n. Zero for a non-decreasing path.
double largest_downward_violation(const std::vector<double>& path);

/// sum_n sum_k e^{-4 pi^2 k^2 eps} X_k(t_n) (eta_k(t_{n+1}) - eta_k(t_n)). Rejects eps <= 0.
double eta_orthogonality(const Trajectory& traj, const EtaModes& eta, double eps);

// Initial conditions.
CanonicalField constant_field(std::size_t M, double c);
/// c0 + c1 e_1; canonical for c1 >= 0.
CanonicalField cosine_profile(std::size_t M, double c0, double c1);
/// Indicator of |x| < width/2 (a rough canonical field).
CanonicalField step_profile(std::size_t M, double width);
/// e^{eps Delta} x, re-placed to the exact canonical layout.
CanonicalField mollify(const CanonicalField& x, double eps);

/// CSV: comment header with (h, M, N, lambda, multiplier, seed, stream), then time,x_0..x_{M-1}.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

struct TrajectoryDump {
  double h = 0.0;
  std::size_t M = 0;
  std::size_t N = 0;
  double lambda_exponent = 0.0;
  double multiplier = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<std::vector<double>> states;
};

/// Little-endian binary dump of the header and the states.
void write_trajectory_binary(std::ostream& os, const Trajectory& traj);
TrajectoryDump read_trajectory_binary(std::istream& is);

}  // namespace rshe
