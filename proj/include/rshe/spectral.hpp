#pragma once

// Symmetric cosine spectral representation of functions on the circle R/Z.
//
// Basis: e_0 = 1, e_m(x) = sqrt(2) cos(2 pi m x). Grid: x_j = j/M, M even.
// Transforms use the uniform M-point rectangle rule, which is exact for
// trigonometric integrands of degree < M.

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace rshe {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;

/// Eigenvalue magnitude of the Laplacian on e_m: Delta e_m = -4 pi^2 m^2 e_m.
inline double laplacian_rate(std::size_t m) {
  const double md = static_cast<double>(m);
  return kFourPiSq * md * md;
}

/// M uniform samples of a function on the circle.
class GridField {
 public:
  GridField() = default;
  explicit GridField(std::vector<double> values);
  GridField(std::size_t M, double fill);

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }
  double node(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(size()); }

  /// Grid L^2 norm sqrt((1/M) sum f_j^2).
  double l2_norm() const;

  friend bool operator==(const GridField&, const GridField&) = default;

 private:
  std::vector<double> values_;
};

/// Cosine coefficients f_0..f_N.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(std::vector<double> coeffs);

  /// Highest mode N.
  std::size_t modes() const { return coeffs_.size() - 1; }
  std::span<const double> coeffs() const { return coeffs_; }
  double operator[](std::size_t m) const { return coeffs_[m]; }

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator*=(double s);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
  friend bool operator==(const SpectralField&, const SpectralField&) = default;

 private:
  std::vector<double> coeffs_;
};

/// Cached trigonometric tables for a grid of size M. The table satisfies
/// cos_at(r) == cos_at(M - r) bit-exactly, so symmetric coefficient sets
/// synthesize bit-symmetric grids.
class TrigTable {
 public:
  explicit TrigTable(std::size_t M);
  std::size_t size() const { return cos_.size(); }
  /// cos(2 pi r / M) for any integer r.
  double cos_at(std::size_t r) const { return cos_[r % cos_.size()]; }
  double sin_at(std::size_t r) const { return sin_[r % sin_.size()]; }
  /// Unchecked access, r < M.
  double cos_raw(std::size_t r) const { return cos_[r]; }
  double sin_raw(std::size_t r) const { return sin_[r]; }

  /// Table shared per thread.
  static const TrigTable& get(std::size_t M);

 private:
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// e_m(x_j) on a grid of size M.
double basis_value(std::size_t m, std::size_t j, std::size_t M);

/// Quadrature cosine transform. Rejects N > M/2 (aliasing).
SpectralField to_spectral(const GridField& f, std::size_t N);
/// Truncation level defaults to M/2.
SpectralField to_spectral(const GridField& f);

/// Synthesis on M points. Rejects odd M or M < 2N.
GridField to_grid(const SpectralField& f, std::size_t M);

/// Heat semigroup e^{t Delta}. Rejects t < 0.
SpectralField heat_evolve(const SpectralField& f, double t);

/// ||Df||_2^2 = sum 4 pi^2 m^2 f_m^2.
double grad_sq_norm(const SpectralField& f);

/// ||f||_{2,mu} = sqrt(sum (m v 1)^{2 mu} f_m^2).
double sobolev_norm(const SpectralField& f, double mu);

struct HeatKernel {
  GridField values;
  /// 2 sum_{m > N} e^{-4 pi^2 m^2 t}, a sup-norm bound on the truncation error.
  double tail_bound = 0.0;
};

/// Periodic heat kernel sampled on M points, truncated at N modes. Rejects t <= 0.
HeatKernel heat_kernel(double t, std::size_t M, std::size_t N);

/// Bound on 2 sum_{m > N} e^{-4 pi^2 m^2 t}.
double heat_tail_bound(double t, std::size_t N);

/// Df(x_j) = -sum 2 pi m sqrt(2) f_m sin(2 pi m x_j). Rejects M < 2N.
GridField spectral_derivative_values(const SpectralField& f, std::size_t M);

/// Discrete circular convolution (1/M) sum_k f(x_k) g(x_j - x_k).
GridField circular_convolution(const GridField& f, const GridField& g);

}  // namespace rshe
