#pragma once

// Ito-formula ledger along scheme trajectories and the Monte Carlo studies
// built on it (residual convergence, moment bounds, reflection diagnostics).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rshe/meanfield.hpp"
#include "rshe/scheme.hpp"

namespace rshe {

struct ItoLedger {
  double t_grad = 0.0;
  double t_stoch = 0.0;
  double t_f1 = 0.0;
  double t_f2 = 0.0;
  double phi_start = 0.0;
  double phi_end = 0.0;
  double residual = 0.0;

  double recomputed_residual() const { return phi_end - phi_start - (t_grad + t_stoch + t_f1 + t_f2); }
  /// residual / (1 + |phi_start|).
  double normalized_residual() const;
};

enum class TermQuadrature {
  /// All terms evaluated at X_n with the full-step dbeta.
  LeftPoint,
  /// Each step is split into sub-steps by bridge sampling; terms are evaluated
  /// at Y at the sub-step left points with the sub-step dbeta.
  MidStep,
  /// As MidStep for the stochastic term; the drift terms use the trapezoid
  /// rule on the sub-step grid, closing each step at the predraft.
  MidStepTrapezoid,
};

struct AccumulateOptions {
  TermQuadrature quadrature = TermQuadrature::LeftPoint;
  std::size_t substeps = 2;
  /// Sub-step nodes h (i / substeps)^grading; 1 is uniform.
  double grading = 1.0;
  /// Stream tag mixed into the bridge RNG for MidStep.
  std::uint64_t bridge_tag = 0x4252494447ULL;
};

/// Rejects an inconsistent trajectory (grid, mode or ledger sizes) and
/// a sub-stepped quadrature with substeps == 0 or grading < 1.
ItoLedger accumulate(const Trajectory& traj, const MeanFieldFunction& phi, const AccumulateOptions& options = {});

/// Several phi along one trajectory (shares the per-step transforms).
std::vector<ItoLedger> accumulate_many(const Trajectory& traj, const std::vector<MeanFieldFunction>& phis,
                                       const AccumulateOptions& options = {});

/// Common configuration of a Monte Carlo study. Each h uses n_steps = T / h,
/// which must be an integer.
struct StudyConfig {
  std::size_t M = 256;
  std::size_t N = 128;
  NoiseSpec noise;
  double T = 0.25;
  CanonicalField x0;
  std::size_t n_paths = 200;
  std::size_t threads = 1;
  AccumulateOptions accumulate;
  EtaQuadrature eta_quadrature = EtaQuadrature::LeftPoint;

  SchemeConfig scheme_for(double h) const;
  void validate() const;
};

/// Stream index of path p at the i-th step size.
inline std::uint64_t path_stream(std::size_t h_index, std::size_t path) {
  return (static_cast<std::uint64_t>(h_index) << 32) | static_cast<std::uint64_t>(path);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and standard error (sample variance, n - 1) of the values.
MeanSe mean_se(const std::vector<double>& values);

struct ResidualRow {
  double h = 0.0;
  std::size_t path = 0;
  std::uint64_t stream = 0;
  ItoLedger ledger;
};

struct ResidualStats {
  double h = 0.0;
  std::size_t n_paths = 0;
  MeanSe residual;
  MeanSe abs_residual;
  MeanSe normalized_residual;
  double mean_t_grad = 0.0;
  double mean_t_stoch = 0.0;
  double mean_t_f1 = 0.0;
  double mean_t_f2 = 0.0;
};

struct MomentStats {
  double h = 0.0;
  double p = 1.0;
  /// max_n E ||DX_n||_2^{2p}
  double max_mean_grad = 0.0;
  /// E max_n ||X_n||_2^{2p}
  double mean_max_l2 = 0.0;
};

struct EtaStats {
  double h = 0.0;
  /// Largest downward violation of <eta, e_1>.
  MeanSe violation_e1;
  /// Same for u = e_0 + e_1 / 2.
  MeanSe violation_mixed;
  std::vector<double> eps;
  std::vector<MeanSe> orthogonality;
};

struct StudyReport {
  std::string kind;
  std::string phi;
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  std::vector<double> h_list;
  std::vector<ResidualRow> rows;
  std::vector<ResidualStats> residuals;
  std::vector<MomentStats> moments;
  std::vector<EtaStats> eta;
};

/// One report per phi; all phi share the trajectories. h_list must be strictly
/// decreasing and n_paths >= 2.
std::vector<StudyReport> mc_residual_study(const StudyConfig& cfg, const std::vector<MeanFieldFunction>& phis,
                                           const std::vector<double>& h_list);
StudyReport mc_residual_study(const StudyConfig& cfg, const MeanFieldFunction& phi, const std::vector<double>& h_list);

/// Requires x0 with finite truncated H^1 norm and p > 0.
StudyReport moment_study(const StudyConfig& cfg, const std::vector<double>& h_list, const std::vector<double>& p_list);

/// Rejects eps <= 0.
StudyReport eta_study(const StudyConfig& cfg, const std::vector<double>& h_list, const std::vector<double>& eps_list);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. The exception of the
/// lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace rshe
