#include "rshe/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rshe {

std::vector<std::size_t> placement_order(std::size_t M) {
  std::vector<std::size_t> order;
  order.reserve(M);
  order.push_back(0);
  for (std::size_t j = 1; j < M / 2; ++j) {
    order.push_back(j);
    order.push_back(M - j);
  }
  order.push_back(M / 2);
  return order;
}

CanonicalField rearrange(const GridField& f) {
  const std::size_t M = f.size();
  const auto v = f.values();
  std::vector<std::size_t> idx(M);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  const auto order = placement_order(M);
  std::vector<double> out(M);
  for (std::size_t i = 0; i < M; ++i) out[order[i]] = v[idx[i]];
  return CanonicalField(GridField(std::move(out)));
}

bool is_canonical(const GridField& f, double tol) {
  const auto r = rearrange(f);
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (std::abs(r[j] - f[j]) > tol) return false;
  }
  return true;
}

CanonicalField CanonicalField::adopt(GridField f, double tol) {
  if (!is_canonical(f, tol)) throw std::invalid_argument("CanonicalField: field is not canonical");
  // Store the exact rearrangement so the placement invariant holds bit-exactly.
  return rearrange(f);
}

double riesz_form(const GridField& f, const GridField& g, const GridField& l) {
  const std::size_t M = f.size();
  if (g.size() != M || l.size() != M) throw std::invalid_argument("riesz_form: size mismatch");
  double total = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    double inner = 0.0;
    for (std::size_t k = 0; k < M; ++k) inner += g[(j + M - k) % M] * l[k];
    total += f[j] * inner;
  }
  const double md = static_cast<double>(M);
  return total / (md * md);
}

InequalitySides riesz_gap(const GridField& f, const GridField& g, const GridField& l) {
  return {riesz_form(f, g, l),
          riesz_form(rearrange(f).grid(), rearrange(g).grid(), rearrange(l).grid())};
}

double averaged_heat_energy(const SpectralField& f, double h, std::size_t M) {
  if (!(h >= 0.0)) throw std::invalid_argument("averaged_heat_energy: h must be >= 0");
  const std::size_t N = f.modes();
  double s = 0.0;
  for (std::size_t m = 1; m <= N; ++m) {
    // e_{M/2} has grid norm^2 = 2; half weight keeps the energy equal to the
    // grid quadratic form.
    const double w = (m == N && 2 * N == M) ? 0.5 : 1.0;
    const double decay = h == 0.0 ? laplacian_rate(m) : -std::expm1(-2.0 * laplacian_rate(m) * h) / (2.0 * h);
    s += w * decay * f[m] * f[m];
  }
  return s;
}

InequalitySides key_inequality_gap(const GridField& u, double h) {
  if (!(h >= 0.0)) throw std::invalid_argument("key_inequality_gap: h must be >= 0");
  const auto star = rearrange(u);
  const std::size_t M = u.size();
  return {averaged_heat_energy(to_spectral(star.grid()), h, M), averaged_heat_energy(to_spectral(u), h, M)};
}

}  // namespace rshe
