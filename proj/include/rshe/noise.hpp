#pragma once

// Coloured noise W_t = sum_k lambda_k e_k beta^k_t and its stochastic
// convolution, sampled exactly per step.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rshe/spectral.hpp"

namespace rshe {

struct NoiseSpec {
  double lambda_exponent = 0.75;
  std::size_t N = 128;
  std::uint64_t seed = 1;
  /// Scales every lambda_k; 0 switches the noise off.
  double multiplier = 1.0;

  /// Throws std::invalid_argument on lambda_exponent <= 1/2, N < 1 or a bad multiplier.
  void validate() const;
  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// lambda_0 = 1, lambda_m = m^{-lambda}, all times the multiplier.
std::vector<double> spectrum(const NoiseSpec& spec);

/// Integral-comparison bound on sum_{m > N} m^{-2 lambda}.
double spectrum_tail_bound(double lambda_exponent, std::size_t N);

/// Per-path random stream keyed by (seed, stream index).
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t stream);
  double normal() { return gauss_(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

/// Moments of (beta increment, OU integral) over a step of length h for mode k.
struct ModeMoments {
  double var_beta = 0.0;
  double var_conv = 0.0;
  double cov = 0.0;
};
ModeMoments mode_moments(std::size_t k, double h);

struct StepDraw {
  std::vector<double> dbeta;
  /// I^k = int_{nh}^{(n+1)h} e^{-a_k((n+1)h - s)} d beta^k_s, a_k = 4 pi^2 k^2.
  std::vector<double> conv;
  friend bool operator==(const StepDraw&, const StepDraw&) = default;
};

struct SamplingDiagnostics {
  /// Modes whose correlation left [-1, 1] numerically and was clamped.
  std::size_t clamped_modes = 0;
};

/// One exact joint draw for modes 0..spec.N. Rejects h <= 0.
StepDraw sample_step(const NoiseSpec& spec, double h, PathRng& rng, SamplingDiagnostics* diag = nullptr);

/// Splits a recorded step [0, h] at tau in (0, h) by sampling the Gaussian
/// bridge of (beta, OU integral) conditioned on the full-step draw. The first
/// element covers [0, tau], the second [tau, h].
std::pair<StepDraw, StepDraw> split_step(const StepDraw& draw, double h, double tau, PathRng& rng);

/// Composes consecutive draws of lengths h1 then h2 into one draw over h1 + h2.
StepDraw compose_steps(const StepDraw& first, const StepDraw& second, double h2);

/// lambda_k * conv[k].
SpectralField convolution_field(const StepDraw& draw, const NoiseSpec& spec);

struct NoiseLedger {
  NoiseSpec spec;
  double h = 0.0;
  std::uint64_t stream = 0;
  std::vector<StepDraw> draws;
  friend bool operator==(const NoiseLedger&, const NoiseLedger&) = default;
};

NoiseLedger make_ledger(const NoiseSpec& spec, double h, std::size_t n_steps, std::uint64_t stream);

/// Mode-major JSON record: dbeta[k][n], conv[k][n].
std::string ledger_to_json(const NoiseLedger& ledger);
NoiseLedger ledger_from_json(const std::string& text);

}  // namespace rshe
