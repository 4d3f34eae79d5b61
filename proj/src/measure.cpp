#include "rshe/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rshe {

double law_mean(std::span<const double> values, const std::function<double(double)>& f) {
  std::vector<double> mapped(values.size());
  std::transform(values.begin(), values.end(), mapped.begin(), f);
  std::sort(mapped.begin(), mapped.end());
  double s = 0.0;
  for (double v : mapped) s += v;
  return s / static_cast<double>(values.size());
}

double pushforward_integral(const MeasureView& mv, const std::function<double(double)>& f) {
  return law_mean(mv.values(), f);
}

double quantile(const MeasureView& mv, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must lie in [0, 1]");
  const auto v = mv.values();
  const double pos = 0.5 * (1.0 - p) * static_cast<double>(v.size());
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t half = v.size() / 2;
  if (lo >= half) return v[half];
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[lo + 1];
}

double w2(const MeasureView& a, const MeasureView& b) {
  if (a.size() != b.size()) throw std::invalid_argument("w2: grid sizes differ");
  const auto x = a.values();
  const auto y = b.values();
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - y[j]) * (x[j] - y[j]);
  return std::sqrt(s / static_cast<double>(x.size()));
}

namespace {

std::vector<double> sample_sorted(const MeasureView& mv, std::size_t n) {
  const auto v = mv.values();
  const std::size_t M = v.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Cell-centred uniform point, evaluated at the grid point of its cell.
    const double pos = (static_cast<double>(i) + 0.5) * static_cast<double>(M) / static_cast<double>(n);
    out[i] = v[std::min(static_cast<std::size_t>(pos), M - 1)];
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double w2_oracle(const MeasureView& a, const MeasureView& b, std::size_t n_samples) {
  if (n_samples == 0) throw std::invalid_argument("w2_oracle: need samples");
  const auto x = sample_sorted(a, n_samples);
  const auto y = sample_sorted(b, n_samples);
  double s = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s / static_cast<double>(n_samples));
}

double coupling_cost(std::span<const double> a, std::span<const double> b, std::span<const std::size_t> perm) {
  if (a.size() != b.size() || perm.size() != a.size()) throw std::invalid_argument("coupling_cost: size mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[perm[j]] - b[j]) * (a[perm[j]] - b[j]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace rshe
