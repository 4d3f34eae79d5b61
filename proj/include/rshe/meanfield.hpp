#pragma once

// Test functions phi on P_2(R) with closed-form Lions derivatives, their
// directional derivatives along the cosine basis, and the generator.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rshe/measure.hpp"
#include "rshe/noise.hpp"

namespace rshe {

/// One product term coef * p(y) * q(z) of a separable second Lions derivative.
struct SeparableTerm {
  double coef = 0.0;
  std::function<double(double)> p;
  std::function<double(double)> q;
};

/// Lions derivatives frozen at one measure mu.
struct LawDerivatives {
  std::function<double(double)> d_mu;                 // d_mu phi(mu)(y)
  std::function<double(double)> grad_d_mu;            // grad_y d_mu phi(mu)(y)
  std::function<double(double, double)> d2_mu;        // d^2_mu phi(mu)(y, z)
  bool d2_vanishes = false;
  /// When non-empty, d2_mu(y, z) == sum coef p(y) q(z).
  std::vector<SeparableTerm> d2_terms;
};

class MeanFieldFunction {
 public:
  using PhiFn = std::function<double(std::span<const double>)>;
  using DerivFn = std::function<LawDerivatives(std::span<const double>)>;

  MeanFieldFunction(std::string name, double derivative_bound, bool bounded, PhiFn phi, DerivFn derivs);

  const std::string& name() const { return name_; }
  /// Uniform bound on |d_mu|, |grad_d_mu| and |d2_mu|.
  double derivative_bound() const { return bound_; }
  /// False for the diagnostic polynomial moments.
  bool has_bounded_derivatives() const { return bounded_; }

  /// phi of the law of the given values (any order).
  double phi(std::span<const double> values) const { return phi_(values); }
  LawDerivatives at(std::span<const double> values) const { return derivs_(values); }

  double phi(const MeasureView& mv) const { return phi_(mv.values()); }
  double d_mu(const MeasureView& mv, double y) const { return derivs_(mv.values()).d_mu(y); }
  double grad_d_mu(const MeasureView& mv, double y) const { return derivs_(mv.values()).grad_d_mu(y); }
  double d2_mu(const MeasureView& mv, double y, double z) const { return derivs_(mv.values()).d2_mu(y, z); }

 private:
  std::string name_;
  double bound_;
  bool bounded_;
  PhiFn phi_;
  DerivFn derivs_;
};

enum class LinearBase { Sin, Cos };

/// phi(mu) = int f d mu, f = sin(a y) or cos(a y).
MeanFieldFunction make_linear(LinearBase base, double a);
/// phi(mu) = tanh(int sin(a y) d mu).
MeanFieldFunction make_tanh_of_sin(double a = 1.0);
/// phi(mu) = int int cos(y - z) d mu d mu.
MeanFieldFunction make_interaction_cos();
/// phi(mu) = int y d mu: d_mu phi = 1, higher derivatives vanish.
MeanFieldFunction make_first_moment();
/// phi(mu) = int y^2 d mu. Unbounded derivatives; diagnostics only.
MeanFieldFunction make_second_moment();

/// Catalog entries with bounded derivatives used by the studies.
std::vector<std::string> catalog_names();
/// Resolves "linear_sin_a<a>", "linear_cos_a<a>", "tanh_of_sin", "interaction_cos",
/// "first_moment", and "second_moment" (only with allow_unbounded).
MeanFieldFunction catalog_lookup(const std::string& name, bool allow_unbounded = false);

double eval_phi(const MeanFieldFunction& phi, const MeasureView& mv);

/// d/d eps phi(X + eps e_k) at 0.
double directional_derivative(const MeanFieldFunction& phi, const GridField& X, std::size_t k);

/// d^2/(d eps1 d eps2) phi(X + eps1 e_k + eps2 e_j) at 0.
double second_directional_derivative(const MeanFieldFunction& phi, const GridField& X, std::size_t k,
                                     std::size_t j);

/// F_1^N(x_j) = sum_{k <= N} lambda_k^2 e_k(x_j)^2.
std::vector<double> f1_values(std::span<const double> lambda, std::size_t M);

/// (1/M^2) sum_{j,l} d2(X_j, X_l) F_2^N(x_j, x_l) using the separable path when
/// available, else the dense double sum.
double f2_contraction(const LawDerivatives& d, std::span<const double> values, std::span<const double> lambda,
                      bool force_dense = false);

struct GeneratorTerms {
  double gradient = 0.0;  // -int grad_d_mu (DX)^2
  double f1 = 0.0;        // 1/2 int grad_d_mu F_1
  double f2 = 0.0;        // 1/2 int int d2_mu F_2
  double total() const { return gradient + f1 + f2; }
};

/// Generator at a canonical field, truncated at N = lambda.size() - 1.
GeneratorTerms generator_terms(const MeanFieldFunction& phi, const CanonicalField& X, std::span<const double> lambda);
double generator(const MeanFieldFunction& phi, const CanonicalField& X, std::span<const double> lambda);

}  // namespace rshe
