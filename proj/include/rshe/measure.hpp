#pragma once

// Probability measures on R represented by their symmetric quantile functions:
// mu = Leb o X^{-1} for a canonical field X.

#include <cstddef>
#include <functional>
#include <span>

#include "rshe/rearrange.hpp"

namespace rshe {

class MeasureView {
 public:
  explicit MeasureView(CanonicalField field) : field_(std::move(field)) {}
  /// The law of an arbitrary grid field.
  static MeasureView of(const GridField& f) { return MeasureView(rearrange(f)); }

  const CanonicalField& field() const { return field_; }
  std::span<const double> values() const { return field_.values(); }
  std::size_t size() const { return field_.size(); }

 private:
  CanonicalField field_;
};

/// (1/M) sum_j f(v_j), summed in sorted order of f(v_j) so the result depends
/// only on the multiset of values.
double law_mean(std::span<const double> values, const std::function<double(double)>& f);

/// int f d mu = (1/M) sum_j f(X(x_j)).
double pushforward_integral(const MeasureView& mv, const std::function<double(double)>& f);

/// q(p) = X((1 - p)/2), linear interpolation between grid nodes. Rejects p outside [0, 1].
double quantile(const MeasureView& mv, double p);

/// Grid L^2 distance between the quantile fields. Rejects unequal M.
double w2(const MeasureView& a, const MeasureView& b);

/// Sort-and-pair W2 between n_samples evaluations of each field at uniform
/// points of the circle, each taking the value of its grid cell.
double w2_oracle(const MeasureView& a, const MeasureView& b, std::size_t n_samples);

/// sqrt((1/M) sum (a_{perm_j} - b_j)^2) for an arbitrary pairing.
double coupling_cost(std::span<const double> a, std::span<const double> b, std::span<const std::size_t> perm);

}  // namespace rshe
