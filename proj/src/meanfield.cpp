#include "rshe/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace rshe {

MeanFieldFunction::MeanFieldFunction(std::string name, double derivative_bound, bool bounded, PhiFn phi,
                                     DerivFn derivs)
    : name_(std::move(name)), bound_(derivative_bound), bounded_(bounded), phi_(std::move(phi)),
      derivs_(std::move(derivs)) {}

namespace {

std::string format_scale(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

}  // namespace

MeanFieldFunction make_linear(LinearBase base, double a) {
  const bool is_sin = base == LinearBase::Sin;
  std::string name = std::string(is_sin ? "linear_sin_a" : "linear_cos_a") + format_scale(a);
  auto f = [is_sin, a](double y) { return is_sin ? std::sin(a * y) : std::cos(a * y); };
  auto phi = [f](std::span<const double> v) { return law_mean(v, f); };
  auto derivs = [is_sin, a](std::span<const double>) {
    LawDerivatives d;
    if (is_sin) {
      d.d_mu = [a](double y) { return a * std::cos(a * y); };
      d.grad_d_mu = [a](double y) { return -a * a * std::sin(a * y); };
    } else {
      d.d_mu = [a](double y) { return -a * std::sin(a * y); };
      d.grad_d_mu = [a](double y) { return -a * a * std::cos(a * y); };
    }
    d.d2_mu = [](double, double) { return 0.0; };
    d.d2_vanishes = true;
    return d;
  };
  return {std::move(name), std::max(std::abs(a), a * a), true, phi, derivs};
}

MeanFieldFunction make_tanh_of_sin(double a) {
  std::string name = a == 1.0 ? "tanh_of_sin" : "tanh_of_sin_a" + format_scale(a);
  auto inner = [a](double y) { return std::sin(a * y); };
  auto phi = [inner](std::span<const double> v) { return std::tanh(law_mean(v, inner)); };
  auto derivs = [inner, a](std::span<const double> v) {
    const double th = std::tanh(law_mean(v, inner));
    const double g1 = 1.0 - th * th;
    const double g2 = -2.0 * th * g1;
    LawDerivatives d;
    d.d_mu = [g1, a](double y) { return g1 * a * std::cos(a * y); };
    d.grad_d_mu = [g1, a](double y) { return -g1 * a * a * std::sin(a * y); };
    d.d2_mu = [g2, a](double y, double z) { return g2 * a * a * std::cos(a * y) * std::cos(a * z); };
    auto c = [a](double y) { return std::cos(a * y); };
    d.d2_terms.push_back({g2 * a * a, c, c});
    return d;
  };
  // |tanh''| <= 4 / (3 sqrt 3) < 1
  return {std::move(name), std::max(std::abs(a), a * a), true, phi, derivs};
}

MeanFieldFunction make_interaction_cos() {
  auto moments = [](std::span<const double> v) {
    return std::pair{law_mean(v, [](double y) { return std::cos(y); }),
                     law_mean(v, [](double y) { return std::sin(y); })};
  };
  auto phi = [moments](std::span<const double> v) {
    const auto [c, s] = moments(v);
    return c * c + s * s;
  };
  auto derivs = [moments](std::span<const double> v) {
    const auto [c, s] = moments(v);
    LawDerivatives d;
    d.d_mu = [c, s](double y) { return -2.0 * (std::sin(y) * c - std::cos(y) * s); };
    d.grad_d_mu = [c, s](double y) { return -2.0 * (std::cos(y) * c + std::sin(y) * s); };
    d.d2_mu = [](double y, double z) { return 2.0 * std::cos(y - z); };
    d.d2_terms.push_back({2.0, [](double y) { return std::cos(y); }, [](double y) { return std::cos(y); }});
    d.d2_terms.push_back({2.0, [](double y) { return std::sin(y); }, [](double y) { return std::sin(y); }});
    return d;
  };
  return {"interaction_cos", 2.0, true, phi, derivs};
}

MeanFieldFunction make_first_moment() {
  auto phi = [](std::span<const double> v) { return law_mean(v, [](double y) { return y; }); };
  auto derivs = [](std::span<const double>) {
    LawDerivatives d;
    d.d_mu = [](double) { return 1.0; };
    d.grad_d_mu = [](double) { return 0.0; };
    d.d2_mu = [](double, double) { return 0.0; };
    d.d2_vanishes = true;
    return d;
  };
  return {"first_moment", 1.0, true, phi, derivs};
}

MeanFieldFunction make_second_moment() {
  auto phi = [](std::span<const double> v) { return law_mean(v, [](double y) { return y * y; }); };
  auto derivs = [](std::span<const double>) {
    LawDerivatives d;
    d.d_mu = [](double y) { return 2.0 * y; };
    d.grad_d_mu = [](double) { return 2.0; };
    d.d2_mu = [](double, double) { return 0.0; };
    d.d2_vanishes = true;
    return d;
  };
  return {"second_moment", std::numeric_limits<double>::infinity(), false, phi, derivs};
}

std::vector<std::string> catalog_names() {
  return {"linear_sin_a1", "linear_cos_a1", "tanh_of_sin", "interaction_cos"};
}

MeanFieldFunction catalog_lookup(const std::string& name, bool allow_unbounded) {
  auto scale_after = [&](const std::string& prefix) {
    const std::string rest = name.substr(prefix.size());
    std::size_t used = 0;
    double a = 0.0;
    try {
      a = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size() || !std::isfinite(a)) {
      throw std::invalid_argument("phi: bad scale in '" + name + "'");
    }
    return a;
  };
  if (name.rfind("linear_sin_a", 0) == 0) return make_linear(LinearBase::Sin, scale_after("linear_sin_a"));
  if (name.rfind("linear_cos_a", 0) == 0) return make_linear(LinearBase::Cos, scale_after("linear_cos_a"));
  if (name == "tanh_of_sin") return make_tanh_of_sin(1.0);
  if (name.rfind("tanh_of_sin_a", 0) == 0) return make_tanh_of_sin(scale_after("tanh_of_sin_a"));
  if (name == "interaction_cos") return make_interaction_cos();
  if (name == "first_moment") return make_first_moment();
  if (name == "second_moment") {
    if (!allow_unbounded) {
      throw std::invalid_argument("phi: 'second_moment' has unbounded derivatives; enable unbounded diagnostics");
    }
    return make_second_moment();
  }
  throw std::invalid_argument("phi: unknown catalog entry '" + name + "'");
}

double eval_phi(const MeanFieldFunction& phi, const MeasureView& mv) { return phi.phi(mv); }

namespace {

// (1/M) sum_j g_j e_k(x_j)
double project(std::span<const double> g, std::size_t k) {
  const std::size_t M = g.size();
  double s = 0.0;
  for (std::size_t j = 0; j < M; ++j) s += g[j] * basis_value(k, j, M);
  return s / static_cast<double>(M);
}

std::vector<double> mapped(std::span<const double> values, const std::function<double(double)>& f) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), f);
  return out;
}

}  // namespace

double directional_derivative(const MeanFieldFunction& phi, const GridField& X, std::size_t k) {
  const auto d = phi.at(X.values());
  return project(mapped(X.values(), d.d_mu), k);
}

double second_directional_derivative(const MeanFieldFunction& phi, const GridField& X, std::size_t k,
                                     std::size_t j) {
  const std::size_t M = X.size();
  const auto v = X.values();
  const auto d = phi.at(v);
  double first = 0.0;
  for (std::size_t i = 0; i < M; ++i) first += d.grad_d_mu(v[i]) * basis_value(k, i, M) * basis_value(j, i, M);
  first /= static_cast<double>(M);
  if (d.d2_vanishes) return first;
  double second = 0.0;
  if (!d.d2_terms.empty()) {
    for (const auto& t : d.d2_terms) second += t.coef * project(mapped(v, t.p), k) * project(mapped(v, t.q), j);
  } else {
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t b = 0; b < M; ++b)
        second += d.d2_mu(v[a], v[b]) * basis_value(k, a, M) * basis_value(j, b, M);
    second /= static_cast<double>(M) * static_cast<double>(M);
  }
  return first + second;
}

std::vector<double> f1_values(std::span<const double> lambda, std::size_t M) {
  std::vector<double> out(M, 0.0);
  for (std::size_t j = 0; j < M; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < lambda.size(); ++k) {
      const double e = basis_value(k, j, M);
      s += lambda[k] * lambda[k] * e * e;
    }
    out[j] = s;
  }
  return out;
}

double f2_contraction(const LawDerivatives& d, std::span<const double> values, std::span<const double> lambda,
                      bool force_dense) {
  if (d.d2_vanishes) return 0.0;
  const std::size_t M = values.size();
  const std::size_t N = lambda.size() - 1;
  if (!force_dense && !d.d2_terms.empty()) {
    double total = 0.0;
    for (const auto& t : d.d2_terms) {
      const auto P = to_spectral(GridField(mapped(values, t.p)), N);
      const auto Q = to_spectral(GridField(mapped(values, t.q)), N);
      double s = 0.0;
      for (std::size_t k = 0; k <= N; ++k) s += lambda[k] * lambda[k] * P[k] * Q[k];
      total += t.coef * s;
    }
    return total;
  }
  // Dense: F_2(x_a, x_b) assembled row by row.
  double total = 0.0;
  std::vector<double> row(M);
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t b = 0; b < M; ++b) {
      double f2 = 0.0;
      for (std::size_t k = 0; k <= N; ++k) f2 += lambda[k] * lambda[k] * basis_value(k, a, M) * basis_value(k, b, M);
      row[b] = d.d2_mu(values[a], values[b]) * f2;
    }
    for (double r : row) total += r;
  }
  return total / (static_cast<double>(M) * static_cast<double>(M));
}

GeneratorTerms generator_terms(const MeanFieldFunction& phi, const CanonicalField& X, std::span<const double> lambda) {
  const std::size_t M = X.size();
  const std::size_t N = lambda.size() - 1;
  const auto v = X.values();
  const auto d = phi.at(v);
  const auto dx = spectral_derivative_values(to_spectral(X.grid(), N), M);
  const auto f1 = f1_values(lambda, M);
  GeneratorTerms g;
  for (std::size_t j = 0; j < M; ++j) {
    const double w = d.grad_d_mu(v[j]);
    g.gradient -= w * dx[j] * dx[j];
    g.f1 += w * f1[j];
  }
  g.gradient /= static_cast<double>(M);
  g.f1 *= 0.5 / static_cast<double>(M);
  g.f2 = 0.5 * f2_contraction(d, v, lambda);
  return g;
}

double generator(const MeanFieldFunction& phi, const CanonicalField& X, std::span<const double> lambda) {
  return generator_terms(phi, X, lambda).total();
}

}  // namespace rshe
