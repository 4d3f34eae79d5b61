#include "rshe/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

namespace rshe {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

GridField::GridField(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 4 || values_.size() % 2 != 0) {
    throw std::invalid_argument("GridField: M must be even and >= 4, got " +
                                std::to_string(values_.size()));
  }
  require_finite(values_, "GridField");
}

GridField::GridField(std::size_t M, double fill) : GridField(std::vector<double>(M, fill)) {}

double GridField::l2_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s / static_cast<double>(size()));
}

SpectralField::SpectralField(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.size() < 2) throw std::invalid_argument("SpectralField: need N >= 1");
  require_finite(coeffs_, "SpectralField");
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  if (other.coeffs_.size() != coeffs_.size()) {
    throw std::invalid_argument("SpectralField: mode count mismatch");
  }
  for (std::size_t m = 0; m < coeffs_.size(); ++m) coeffs_[m] += other.coeffs_[m];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

TrigTable::TrigTable(std::size_t M) : cos_(M), sin_(M) {
  // Fill the first half and mirror so cos(r) == cos(M - r) and sin(r) == -sin(M - r)
  // hold exactly.
  for (std::size_t r = 0; r <= M / 2; ++r) {
    const double angle = kTwoPi * static_cast<double>(r) / static_cast<double>(M);
    cos_[r] = std::cos(angle);
    sin_[r] = std::sin(angle);
  }
  if (M % 4 == 0) {
    cos_[M / 4] = 0.0;
    sin_[M / 4] = 1.0;
  }
  sin_[0] = 0.0;
  if (M >= 2) {
    sin_[M / 2] = 0.0;
    cos_[M / 2] = -1.0;
  }
  for (std::size_t r = M / 2 + 1; r < M; ++r) {
    cos_[r] = cos_[M - r];
    sin_[r] = -sin_[M - r];
  }
}

const TrigTable& TrigTable::get(std::size_t M) {
  thread_local std::map<std::size_t, std::unique_ptr<TrigTable>> cache;
  auto& slot = cache[M];
  if (!slot) slot = std::make_unique<TrigTable>(M);
  return *slot;
}

double basis_value(std::size_t m, std::size_t j, std::size_t M) {
  if (m == 0) return 1.0;
  return std::numbers::sqrt2 * TrigTable::get(M).cos_at(m * j);
}

namespace {

// The FFTW planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Half-grid real transforms of size M/2 + 1 (DCT-I) and M/2 - 1 (DST-I).
// Cosine sums over the full grid only see the even part of a field, and
// synthesized cosine (sine) series are even (odd), so half the grid suffices.
class HalfTransforms {
 public:
  explicit HalfTransforms(std::size_t M) : half_(M / 2) {
    cos_in_ = fftw_alloc_real(half_ + 1);
    cos_out_ = fftw_alloc_real(half_ + 1);
    sin_in_ = fftw_alloc_real(std::max<std::size_t>(half_ - 1, 1));
    sin_out_ = fftw_alloc_real(std::max<std::size_t>(half_ - 1, 1));
    std::lock_guard lock(planner_mutex());
    dct_ = fftw_plan_r2r_1d(static_cast<int>(half_ + 1), cos_in_, cos_out_, FFTW_REDFT00, FFTW_ESTIMATE);
    dst_ = fftw_plan_r2r_1d(static_cast<int>(half_ - 1), sin_in_, sin_out_, FFTW_RODFT00, FFTW_ESTIMATE);
  }
  ~HalfTransforms() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(dct_);
    fftw_destroy_plan(dst_);
    fftw_free(cos_in_);
    fftw_free(cos_out_);
    fftw_free(sin_in_);
    fftw_free(sin_out_);
  }
  HalfTransforms(const HalfTransforms&) = delete;
  HalfTransforms& operator=(const HalfTransforms&) = delete;

  // out[k] = x[0] + (-1)^k x[half] + 2 sum_{0<j<half} x[j] cos(pi j k / half)
  double* cos_input() { return cos_in_; }
  const double* cosine() {
    fftw_execute(dct_);
    return cos_out_;
  }
  // out[k-1] = 2 sum_{0<j<half} x[j-1] sin(pi j k / half), 0 < k < half
  double* sin_input() { return sin_in_; }
  const double* sine() {
    fftw_execute(dst_);
    return sin_out_;
  }

  static HalfTransforms& get(std::size_t M) {
    thread_local std::map<std::size_t, std::unique_ptr<HalfTransforms>> cache;
    auto& slot = cache[M];
    if (!slot) slot = std::make_unique<HalfTransforms>(M);
    return *slot;
  }

 private:
  std::size_t half_;
  double* cos_in_;
  double* cos_out_;
  double* sin_in_;
  double* sin_out_;
  fftw_plan dct_;
  fftw_plan dst_;
};

}  // namespace

SpectralField to_spectral(const GridField& f, std::size_t N) {
  const std::size_t M = f.size();
  if (N > M / 2) {
    throw std::invalid_argument("to_spectral: N = " + std::to_string(N) + " exceeds M/2 = " +
                                std::to_string(M / 2) + " (aliasing)");
  }
  if (N < 1) throw std::invalid_argument("to_spectral: N must be >= 1");
  const std::size_t half = M / 2;
  const auto v = f.values();
  auto& tr = HalfTransforms::get(M);
  double* x = tr.cos_input();
  x[0] = v[0];
  x[half] = v[half];
  for (std::size_t j = 1; j < half; ++j) x[j] = 0.5 * (v[j] + v[M - j]);
  const double* y = tr.cosine();
  std::vector<double> c(N + 1);
  const double scale = std::numbers::sqrt2 / static_cast<double>(M);
  c[0] = y[0] / static_cast<double>(M);
  for (std::size_t m = 1; m <= N; ++m) c[m] = scale * y[m];
  return SpectralField(std::move(c));
}

SpectralField to_spectral(const GridField& f) { return to_spectral(f, f.size() / 2); }

GridField to_grid(const SpectralField& f, std::size_t M) {
  const std::size_t N = f.modes();
  if (M % 2 != 0 || M < 2 * N) {
    throw std::invalid_argument("to_grid: need even M >= 2N, got M = " + std::to_string(M) +
                                ", N = " + std::to_string(N));
  }
  const std::size_t half = M / 2;
  auto& tr = HalfTransforms::get(M);
  double* x = tr.cos_input();
  std::fill(x, x + half + 1, 0.0);
  x[0] = f[0];
  for (std::size_t m = 1; m <= N; ++m) x[m] = f[m] / std::numbers::sqrt2;
  if (N == half) x[half] = std::numbers::sqrt2 * f[half];
  const double* y = tr.cosine();
  std::vector<double> out(M);
  for (std::size_t j = 0; j <= half; ++j) out[j] = y[j];
  for (std::size_t j = half + 1; j < M; ++j) out[j] = y[M - j];
  return GridField(std::move(out));
}

SpectralField heat_evolve(const SpectralField& f, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("heat_evolve: t must be >= 0");
  std::vector<double> c(f.coeffs().begin(), f.coeffs().end());
  if (t == 0.0) return SpectralField(std::move(c));
  for (std::size_t m = 1; m < c.size(); ++m) c[m] *= std::exp(-laplacian_rate(m) * t);
  return SpectralField(std::move(c));
}

double grad_sq_norm(const SpectralField& f) {
  double s = 0.0;
  for (std::size_t m = 1; m <= f.modes(); ++m) s += laplacian_rate(m) * f[m] * f[m];
  return s;
}

double sobolev_norm(const SpectralField& f, double mu) {
  double s = 0.0;
  for (std::size_t m = 0; m <= f.modes(); ++m) {
    const double w = std::pow(static_cast<double>(m == 0 ? 1 : m), 2.0 * mu);
    s += w * f[m] * f[m];
  }
  return std::sqrt(s);
}

double heat_tail_bound(double t, std::size_t N) {
  // Consecutive terms shrink by at least e^{-4 pi^2 (2N+3) t} beyond N+1.
  const double n1 = static_cast<double>(N + 1);
  const double first = std::exp(-kFourPiSq * n1 * n1 * t);
  const double ratio = std::exp(-kFourPiSq * (2.0 * n1 + 1.0) * t);
  return 2.0 * first / (1.0 - ratio);
}

HeatKernel heat_kernel(double t, std::size_t M, std::size_t N) {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: t must be > 0");
  std::vector<double> c(N + 1, 0.0);
  c[0] = 1.0;
  // 2 e^{-a t} cos(2 pi m x) = sqrt(2) e^{-a t} e_m(x)
  for (std::size_t m = 1; m <= N; ++m) c[m] = std::numbers::sqrt2 * std::exp(-laplacian_rate(m) * t);
  return {to_grid(SpectralField(std::move(c)), M), heat_tail_bound(t, N)};
}

GridField spectral_derivative_values(const SpectralField& f, std::size_t M) {
  const std::size_t N = f.modes();
  if (M % 2 != 0 || M < 2 * N) {
    throw std::invalid_argument("spectral_derivative_values: need even M >= 2N");
  }
  // d/dx sqrt(2) cos(2 pi m x) = -sqrt(2) 2 pi m sin(2 pi m x); the Nyquist sine vanishes on the grid.
  const std::size_t half = M / 2;
  std::vector<double> out(M, 0.0);
  if (half < 2) return GridField(std::move(out));
  auto& tr = HalfTransforms::get(M);
  double* x = tr.sin_input();
  std::fill(x, x + half - 1, 0.0);
  for (std::size_t m = 1; m <= std::min(N, half - 1); ++m) {
    x[m - 1] = -0.5 * std::numbers::sqrt2 * kTwoPi * static_cast<double>(m) * f[m];
  }
  const double* y = tr.sine();
  for (std::size_t j = 1; j < half; ++j) {
    out[j] = y[j - 1];
    out[M - j] = -y[j - 1];
  }
  return GridField(std::move(out));
}

GridField circular_convolution(const GridField& f, const GridField& g) {
  const std::size_t M = f.size();
  if (g.size() != M) throw std::invalid_argument("circular_convolution: size mismatch");
  std::vector<double> out(M, 0.0);
  for (std::size_t j = 0; j < M; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < M; ++k) s += f[k] * g[(j + M - k) % M];
    out[j] = s / static_cast<double>(M);
  }
  return GridField(std::move(out));
}

}  // namespace rshe
