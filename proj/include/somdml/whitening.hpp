#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "somdml/error.hpp"
#include "somdml/metric.hpp"
#include "somdml/numerics.hpp"

namespace somdml {

// Factor L (r x d) of a metric with M_clipped = L^T L. Euclidean distance
// between L x_i and L x_j equals the Mahalanobis distance of x_i, x_j.
template <typename Scalar>
struct LinearTransform {
  MatrixX<Scalar> l;
  Eigen::Index dropped_dims = 0;

  Eigen::Index input_dim() const { return l.cols(); }
  Eigen::Index output_dim() const { return l.rows(); }

  static LinearTransform Identity(Eigen::Index dim) {
    return {MatrixX<Scalar>::Identity(dim, dim), 0};
  }
};

using LinearTransformd = LinearTransform<double>;

// Rows of L are sqrt(lambda_k) * phi_k^T for every eigenpair with
// lambda_k > eps * lambda_max; the rest are dropped and counted.
template <typename Scalar>
LinearTransform<Scalar> whiten_decompose(const MahalanobisMetric<Scalar>& m,
                                         double eps = 1e-10) {
  const EigenDecomposition<Scalar> eig = sym_eig(m.sym());
  const Eigen::Index d = m.dim();
  const Scalar lambda_max = d > 0 ? eig.eigenvalues(0) : Scalar(0);
  if (!(lambda_max > Scalar(0))) {
    throw DegenerateMetricError(
        "whiten_decompose: metric has no positive eigenvalue");
  }
  const Scalar cutoff = Scalar(eps) * lambda_max;
  Eigen::Index kept = 0;
  while (kept < d && eig.eigenvalues(kept) > cutoff) ++kept;

  LinearTransform<Scalar> t;
  t.l = eig.eigenvalues.head(kept).cwiseSqrt().asDiagonal() *
        eig.eigenvectors.leftCols(kept).transpose();
  t.dropped_dims = d - kept;
  return t;
}

// Row i of the result is L x_i.
template <typename Scalar, typename Derived>
MatrixX<Scalar> whiten_apply(const LinearTransform<Scalar>& t,
                             const Eigen::MatrixBase<Derived>& x) {
  if (x.cols() != t.input_dim()) {
    throw DimensionMismatchError("whiten_apply attribute count",
                                 static_cast<std::size_t>(t.input_dim()),
                                 static_cast<std::size_t>(x.cols()));
  }
  return x * t.l.transpose();
}

}  // namespace somdml
