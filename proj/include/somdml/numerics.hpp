#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "somdml/error.hpp"

namespace somdml {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Largest absolute entry.
template <typename Derived>
typename Derived::Scalar max_abs(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return typename Derived::Scalar(0);
  return m.cwiseAbs().maxCoeff();
}

// Dense symmetric matrix. The input is symmetrized as (A + A^T) / 2 on
// construction, so entries(i, j) == entries(j, i) holds exactly afterwards.
template <typename Scalar>
class SymMatrix {
 public:
  using Matrix = MatrixX<Scalar>;

  SymMatrix() = default;

  template <typename Derived>
  explicit SymMatrix(const Eigen::MatrixBase<Derived>& a) {
    if (a.rows() != a.cols()) {
      throw DimensionMismatchError("SymMatrix requires a square matrix",
                                   static_cast<std::size_t>(a.rows()),
                                   static_cast<std::size_t>(a.cols()));
    }
    entries_ = (a + a.transpose()) * Scalar(0.5);
  }

  static SymMatrix Identity(Eigen::Index dim) {
    return SymMatrix(Matrix::Identity(dim, dim));
  }
  static SymMatrix Zero(Eigen::Index dim) {
    return SymMatrix(Matrix::Zero(dim, dim));
  }

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& matrix() const { return entries_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const {
    return entries_(i, j);
  }

 private:
  Matrix entries_;
};

using SymMatrixd = SymMatrix<double>;

template <typename Scalar>
struct EigenDecomposition {
  VectorX<Scalar> eigenvalues;   // sorted descending
  MatrixX<Scalar> eigenvectors;  // column k pairs with eigenvalues(k)

  MatrixX<Scalar> reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

struct JacobiOptions {
  int max_sweeps = 100;
  double relative_tolerance = 1e-12;
};

namespace detail {

template <typename Scalar>
Scalar off_diagonal_norm(const MatrixX<Scalar>& a) {
  Scalar sum(0);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

// One Jacobi rotation zeroing a(p, q); the same rotation is accumulated into v.
template <typename Scalar>
void rotate(MatrixX<Scalar>& a, MatrixX<Scalar>& v, Eigen::Index p,
            Eigen::Index q) {
  const Scalar apq = a(p, q);
  if (apq == Scalar(0)) return;
  const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
  Scalar t;
  if (std::abs(theta) > Scalar(1e150)) {
    t = Scalar(1) / (Scalar(2) * theta);
  } else {
    t = Scalar(1) / (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
    if (theta < Scalar(0)) t = -t;
  }
  const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
  const Scalar s = t * c;

  const Scalar app = a(p, p);
  const Scalar aqq = a(q, q);
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    if (k == p || k == q) continue;
    const Scalar akp = a(k, p);
    const Scalar akq = a(k, q);
    const Scalar new_kp = c * akp - s * akq;
    const Scalar new_kq = s * akp + c * akq;
    a(k, p) = new_kp;
    a(p, k) = new_kp;
    a(k, q) = new_kq;
    a(q, k) = new_kq;
  }
  a(p, p) = app - t * apq;
  a(q, q) = aqq + t * apq;
  a(p, q) = Scalar(0);
  a(q, p) = Scalar(0);

  for (Eigen::Index k = 0; k < v.rows(); ++k) {
    const Scalar vkp = v(k, p);
    const Scalar vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

// Flip column signs so the largest-magnitude entry is positive (first index
// wins ties).
template <typename Derived>
void canonicalize_signs(Eigen::MatrixBase<Derived>& columns) {
  using Scalar = typename Derived::Scalar;
  for (Eigen::Index k = 0; k < columns.cols(); ++k) {
    Eigen::Index arg = 0;
    Scalar best(-1);
    for (Eigen::Index i = 0; i < columns.rows(); ++i) {
      const Scalar mag = std::abs(columns(i, k));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (columns.rows() > 0 && columns(arg, k) < Scalar(0)) {
      columns.col(k) = -columns.col(k);
    }
  }
}

}  // namespace detail

// Symmetric eigendecomposition by cyclic Jacobi rotations.
//
// Converges when the off-diagonal Frobenius norm drops to
// relative_tolerance * ||A||_F. Eigenvalues come back in descending order and
// each eigenvector has its largest-magnitude component positive.
template <typename Scalar>
EigenDecomposition<Scalar> sym_eig(const SymMatrix<Scalar>& input,
                                   const JacobiOptions& options = {}) {
  const Eigen::Index n = input.dim();
  if (!input.matrix().allFinite()) {
    throw InvalidInputError("sym_eig: matrix has non-finite entries");
  }

  MatrixX<Scalar> a = input.matrix();
  MatrixX<Scalar> v = MatrixX<Scalar>::Identity(n, n);
  const Scalar threshold =
      Scalar(options.relative_tolerance) * a.norm();

  Scalar off = detail::off_diagonal_norm(a);
  int sweep = 0;
  while (off > threshold) {
    if (sweep == options.max_sweeps) {
      throw ConvergenceError("sym_eig: Jacobi sweep budget exhausted",
                             static_cast<double>(off));
    }
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        detail::rotate(a, v, p, q);
      }
    }
    off = detail::off_diagonal_norm(a);
    ++sweep;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&a](Eigen::Index i, Eigen::Index j) {
                     return a(i, i) > a(j, j);
                   });

  EigenDecomposition<Scalar> out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = a(src, src);
    out.eigenvectors.col(k) = v.col(src);
  }
  detail::canonicalize_signs(out.eigenvectors);
  return out;
}

// Nearest PSD matrix in Frobenius norm: clip negative eigenvalues to zero.
template <typename Scalar>
SymMatrix<Scalar> project_psd(const SymMatrix<Scalar>& a,
                              const JacobiOptions& options = {}) {
  const EigenDecomposition<Scalar> eig = sym_eig(a, options);
  const VectorX<Scalar> clipped = eig.eigenvalues.cwiseMax(Scalar(0));
  return SymMatrix<Scalar>(eig.eigenvectors * clipped.asDiagonal() *
                           eig.eigenvectors.transpose());
}

template <typename Scalar>
Scalar min_eigenvalue(const SymMatrix<Scalar>& a) {
  if (a.dim() == 0) return Scalar(0);
  return sym_eig(a).eigenvalues(a.dim() - 1);
}

}  // namespace somdml
