#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Jacobi>

#include "typecrowd/error.hpp"

namespace typecrowd {

template <typename Scalar>
struct SymmetricEigen {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;                // descending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;  // columns match values
  int sweeps = 0;
};

struct JacobiSettings {
  double tolerance = 1e-10;  // stop when ||offdiag||_F < tolerance * ||A||_F
  int max_sweeps = 100;
  bool compute_vectors = true;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (only the lower
/// triangle is trusted; the input is symmetrized first).
template <typename Derived>
SymmetricEigen<typename Derived::Scalar> jacobi_eigen(const Eigen::MatrixBase<Derived>& input,
                                                      const JacobiSettings& settings = {}) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (input.rows() != input.cols()) throw Error(ErrorKind::kShape, "matrix is not square");
  const Eigen::Index n = input.rows();

  Matrix a = (input + input.transpose()) / Scalar(2);
  Matrix v;
  if (settings.compute_vectors) v = Matrix::Identity(n, n);

  const Scalar frob = a.norm();
  const Scalar target = Scalar(settings.tolerance) * frob;
  const auto off_norm = [&] {
    Scalar s(0);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = j + 1; i < n; ++i) s += a(i, j) * a(i, j);
    return std::sqrt(Scalar(2) * s);
  };

  int sweep = 0;
  for (; off_norm() > target; ++sweep) {
    if (sweep >= settings.max_sweeps) {
      throw Error(ErrorKind::kNumericalFailure, "Jacobi sweeps did not converge");
    }
    // Entries this small relative to the whole matrix cannot move the eigenvalues.
    const Scalar skip = std::numeric_limits<Scalar>::epsilon() * frob / Scalar(n);
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(q, p)) <= skip) {
          a(q, p) = a(p, q) = Scalar(0);
          continue;
        }
        Eigen::JacobiRotation<Scalar> rot;
        rot.makeJacobi(a(p, p), a(q, p), a(q, q));
        a.applyOnTheLeft(p, q, rot.adjoint());
        a.applyOnTheRight(p, q, rot);
        a(q, p) = a(p, q) = Scalar(0);
        if (settings.compute_vectors) v.applyOnTheRight(p, q, rot);
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

  SymmetricEigen<Scalar> out;
  out.sweeps = sweep;
  out.values.resize(n);
  if (settings.compute_vectors) out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    if (settings.compute_vectors) out.vectors.col(k) = v.col(src);
  }
  return out;
}

}  // namespace typecrowd
