#pragma once

#include <cstddef>
#include <vector>

#include "rshe/spectral.hpp"

namespace rshe {

/// A grid field in placement order: the largest value at index 0, then
/// alternately index 1, M-1, 2, M-2, ..., with the smallest at M/2.
/// Only rearrange() and adopt() construct one.
class CanonicalField {
 public:
  CanonicalField() = default;

  const GridField& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  std::span<const double> values() const { return grid_.values(); }
  double operator[](std::size_t j) const { return grid_[j]; }

  /// Wraps f after checking is_canonical(f, tol). Throws std::invalid_argument otherwise.
  static CanonicalField adopt(GridField f, double tol = 0.0);

  friend bool operator==(const CanonicalField&, const CanonicalField&) = default;

 private:
  friend CanonicalField rearrange(const GridField& f);
  explicit CanonicalField(GridField g) : grid_(std::move(g)) {}
  GridField grid_;
};

/// Grid indices in the order they receive sorted values: 0, 1, M-1, 2, M-2, ..., M/2.
std::vector<std::size_t> placement_order(std::size_t M);

/// Symmetric non-increasing rearrangement. Ties are broken by a stable sort on
/// the original index, so the output is a permutation of the input.
CanonicalField rearrange(const GridField& f);

bool is_canonical(const GridField& f, double tol);

struct InequalitySides {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap() const { return rhs - lhs; }
};

/// (1/M^2) sum_{j,k} f(x_j) g(x_j - x_k) l(x_k), periodic indices.
double riesz_form(const GridField& f, const GridField& g, const GridField& l);

/// lhs: riesz_form(f, g, l); rhs: the same on the rearrangements.
InequalitySides riesz_gap(const GridField& f, const GridField& g, const GridField& l);

/// Time-averaged Dirichlet energy of the heat flow over [0, h] for u* (lhs)
/// and u (rhs); h = 0 gives the plain Dirichlet energies. Rejects h < 0.
/// Only the cosine part of u is seen, so u should be a symmetric field.
InequalitySides key_inequality_gap(const GridField& u, double h);

/// (1/(2h)) sum_m (1 - e^{-8 pi^2 m^2 h}) f_m^2, or sum_m 4 pi^2 m^2 f_m^2 at h = 0.
/// When f came from a grid of size M = 2N, the Nyquist mode is half-weighted.
double averaged_heat_energy(const SpectralField& f, double h, std::size_t M = 0);

}  // namespace rshe
