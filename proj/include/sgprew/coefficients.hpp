#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgprew {

using ScalarField = std::function<double(std::span<const double>)>;
/// Writes the d x d matrix A(x) row-major into `a`.
using MatrixField = std::function<void(std::span<const double> x, std::span<double> a)>;
using Function1D = std::function<double(double)>;

/// Scalar value and gradient at one point.
struct ValueGradient {
  double value = 0.0;
  std::vector<double> gradient;
};
using FieldWithGradient = std::function<ValueGradient(std::span<const double>)>;

/// Sum of products of 1-D functions: f(x) = sum_k prod_s g_{k,s}(x_s).
/// An empty factor means the constant 1.
struct SeparableFunction {
  std::vector<std::vector<Function1D>> terms;

  double operator()(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& term : terms) {
      double p = 1.0;
      for (std::size_t s = 0; s < term.size(); ++s)
        if (term[s]) p *= term[s](x[s]);
      sum += p;
    }
    return sum;
  }
};

/// One product term of a separable bilinear form,
///   integral of prod_r factor_r(x_r) * D_trial u * D_test v,
/// where D_k is the partial derivative in direction k, or the identity for -1.
struct SeparableTerm {
  int trial_dir = -1;
  int test_dir = -1;
  std::vector<Function1D> factors;  // size d, empty entries are 1

  double factor(int r, double x) const { return factors[r] ? factors[r](x) : 1.0; }
};

/// Coefficients A(x), kappa(x) of a(u,v) = int grad(u)^T A grad(v) + kappa u v.
/// Callbacks must be safe to call concurrently.
struct CoefficientField {
  int dim = 0;
  MatrixField diffusion;
  ScalarField reaction;  // empty means kappa = 0
  std::optional<std::vector<SeparableTerm>> separable;
  bool constant = false;

  void diffusion_at(std::span<const double> x, std::span<double> a) const { diffusion(x, a); }
  double reaction_at(std::span<const double> x) const { return reaction ? reaction(x) : 0.0; }

  /// A = diag(alpha), constant kappa.
  static CoefficientField constant_diagonal(std::vector<double> alpha, double kappa) {
    const int d = static_cast<int>(alpha.size());
    std::vector<SeparableTerm> terms;
    for (int s = 0; s < d; ++s) {
      SeparableTerm term{s, s, std::vector<Function1D>(d)};
      const double a = alpha[s];
      if (a != 1.0) term.factors[0] = [a](double) { return a; };
      terms.push_back(std::move(term));
    }
    if (kappa != 0.0) {
      SeparableTerm term{-1, -1, std::vector<Function1D>(d)};
      term.factors[0] = [kappa](double) { return kappa; };
      terms.push_back(std::move(term));
    }
    auto field = from_separable(d, std::move(terms));
    field.constant = true;
    return field;
  }

  static CoefficientField laplace(int d, double kappa = 0.0) { return constant_diagonal(std::vector<double>(d, 1.0), kappa); }

  /// Builds the pointwise callbacks from the product terms, keeping the terms
  /// for factorized assembly.
  static CoefficientField from_separable(int d, std::vector<SeparableTerm> terms) {
    for (const auto& term : terms) {
      if (static_cast<int>(term.factors.size()) != d) throw std::invalid_argument("SeparableTerm: wrong number of factors");
      if ((term.trial_dir < 0) != (term.test_dir < 0))
        throw std::invalid_argument("SeparableTerm: first-order terms are not supported");
      if (term.trial_dir >= d || term.test_dir >= d) throw std::invalid_argument("SeparableTerm: direction out of range");
    }
    CoefficientField field;
    field.dim = d;
    auto shared = std::make_shared<std::vector<SeparableTerm>>(terms);
    field.diffusion = [shared, d](std::span<const double> x, std::span<double> a) {
      std::fill(a.begin(), a.end(), 0.0);
      for (const auto& term : *shared) {
        if (term.trial_dir < 0) continue;
        double p = 1.0;
        for (int r = 0; r < d; ++r) p *= term.factor(r, x[r]);
        a[term.trial_dir * d + term.test_dir] += p;
      }
    };
    bool has_reaction = false;
    for (const auto& term : terms) has_reaction = has_reaction || term.trial_dir < 0;
    if (has_reaction)
      field.reaction = [shared, d](std::span<const double> x) {
        double sum = 0.0;
        for (const auto& term : *shared) {
          if (term.trial_dir >= 0) continue;
          double p = 1.0;
          for (int r = 0; r < d; ++r) p *= term.factor(r, x[r]);
          sum += p;
        }
        return sum;
      };
    field.separable = std::move(terms);
    return field;
  }

  static CoefficientField general(int d, MatrixField a, ScalarField kappa) {
    CoefficientField field;
    field.dim = d;
    field.diffusion = std::move(a);
    field.reaction = std::move(kappa);
    return field;
  }

  /// Checks symmetry of A and kappa >= 0 on random points; throws on failure.
  void check_admissible(int samples = 100, unsigned seed = 1) const {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(dim), a(dim * dim);
    for (int k = 0; k < samples; ++k) {
      for (auto& v : x) v = u(rng);
      diffusion(x, a);
      for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) {
          const double scale = std::max({1.0, std::abs(a[i * dim + j]), std::abs(a[j * dim + i])});
          if (std::abs(a[i * dim + j] - a[j * dim + i]) > 1e-12 * scale)
            throw std::domain_error("CoefficientField: A(x) is not symmetric");
        }
      if (reaction_at(x) < 0.0) throw std::domain_error("CoefficientField: kappa(x) < 0");
    }
  }
};

}  // namespace sgprew
