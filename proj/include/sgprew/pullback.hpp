#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "coefficients.hpp"

namespace sgprew {

/// Smooth map of the unit cube with its Jacobian J_ij = d map_i / d x_j (row-major).
struct CoordinateMap {
  int dim = 0;
  std::function<void(std::span<const double> x, std::span<double> y)> map;
  std::function<void(std::span<const double> x, std::span<double> jac)> jacobian;

  static CoordinateMap identity(int d) {
    CoordinateMap m;
    m.dim = d;
    m.map = [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
    m.jacobian = [d](std::span<const double>, std::span<double> j) {
      std::fill(j.begin(), j.end(), 0.0);
      for (int s = 0; s < d; ++s) j[s * d + s] = 1.0;
    };
    return m;
  }
};

/// Problem data transported to the reference cube.
struct PulledBack {
  CoefficientField coeff;
  ScalarField rhs;  // f(map(x)) |det J(x)|
};

namespace detail {

struct JacobianInfo {
  Eigen::MatrixXd jinv;
  double absdet;
};

inline JacobianInfo jacobian_info(const CoordinateMap& m, std::span<const double> x) {
  const int d = m.dim;
  std::vector<double> j(d * d);
  m.jacobian(x, j);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> J(j.data(), d, d);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
  const double det = lu.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-14) throw std::domain_error("pullback: singular Jacobian");
  return {lu.inverse(), std::abs(det)};
}

}  // namespace detail

/// A = J^{-1} J^{-T} |det J|, kappa~ = kappa(map) |det J|, f~ = f(map) |det J|.
/// `kappa` and `f` are given in physical coordinates; either may be empty.
inline PulledBack pullback(const CoordinateMap& m, const ScalarField& kappa, const ScalarField& f) {
  const int d = m.dim;
  auto shared = std::make_shared<CoordinateMap>(m);
  PulledBack out;
  out.coeff.dim = d;
  out.coeff.diffusion = [shared, d](std::span<const double> x, std::span<double> a) {
    const auto info = detail::jacobian_info(*shared, x);
    const Eigen::MatrixXd A = info.jinv * info.jinv.transpose() * info.absdet;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a[r * d + c] = A(r, c);
  };
  if (kappa)
    out.coeff.reaction = [shared, kappa, d](std::span<const double> x) {
      std::vector<double> y(d);
      shared->map(x, y);
      return kappa(y) * detail::jacobian_info(*shared, x).absdet;
    };
  if (f)
    out.rhs = [shared, f, d](std::span<const double> x) {
      std::vector<double> y(d);
      shared->map(x, y);
      return f(y) * detail::jacobian_info(*shared, x).absdet;
    };
  return out;
}

}  // namespace sgprew
