#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "somdml/error.hpp"
#include "somdml/numerics.hpp"

namespace somdml {

template <typename Scalar>
struct PcaModel {
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean;
  MatrixX<Scalar> components;  // r x d, orthonormal rows
  VectorX<Scalar> explained_variance;
  VectorX<Scalar> explained_variance_ratio;
  Scalar total_variance = Scalar(0);

  Eigen::Index input_dim() const { return components.cols(); }
  Eigen::Index output_dim() const { return components.rows(); }
  Scalar cumulative_ratio() const { return explained_variance_ratio.sum(); }
};

using PcaModeld = PcaModel<double>;

enum class PcaRoute { Auto, Covariance, Gram };

// Top-r principal directions of the sample covariance. The Auto route
// diagonalizes the n x n Gram matrix instead of the d x d covariance when
// n < d (eigenfaces).
template <typename Derived>
PcaModel<typename Derived::Scalar> pca_fit(const Eigen::MatrixBase<Derived>& x,
                                           Eigen::Index r,
                                           PcaRoute route = PcaRoute::Auto) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw InvalidInputError("pca_fit: needs at least two samples");
  if (r < 1 || r > std::min(n - 1, d)) {
    throw InvalidInputError("pca_fit: component count " + std::to_string(r) +
                            " outside [1, " +
                            std::to_string(std::min(n - 1, d)) + "]");
  }

  PcaModel<Scalar> model;
  model.mean = x.colwise().mean();
  const MatrixX<Scalar> centered = x.rowwise() - model.mean;
  const Scalar denom = static_cast<Scalar>(n - 1);
  model.total_variance = centered.squaredNorm() / denom;
  if (!(model.total_variance > Scalar(0))) {
    throw InvalidInputError("pca_fit: data has zero total variance");
  }

  if (route == PcaRoute::Auto) {
    route = n < d ? PcaRoute::Gram : PcaRoute::Covariance;
  }

  model.components.resize(r, d);
  model.explained_variance.resize(r);
  if (route == PcaRoute::Covariance) {
    const SymMatrix<Scalar> cov(centered.transpose() * centered / denom);
    const auto eig = sym_eig(cov);
    model.explained_variance = eig.eigenvalues.head(r);
    model.components = eig.eigenvectors.leftCols(r).transpose();
  } else {
    const SymMatrix<Scalar> gram(centered * centered.transpose() / denom);
    const auto eig = sym_eig(gram);
    for (Eigen::Index k = 0; k < r; ++k) {
      const Scalar lambda = eig.eigenvalues(k);
      if (!(lambda > Scalar(1e-12) * model.total_variance)) {
        throw InvalidInputError("pca_fit: data rank is below " +
                                std::to_string(r) + " components");
      }
      VectorX<Scalar> direction = centered.transpose() * eig.eigenvectors.col(k);
      direction /= direction.norm();
      model.components.row(k) = direction.transpose();
      model.explained_variance(k) = lambda;
    }
  }

  MatrixX<Scalar> rows_as_columns = model.components.transpose();
  detail::canonicalize_signs(rows_as_columns);
  model.components = rows_as_columns.transpose();
  model.explained_variance_ratio =
      model.explained_variance / model.total_variance;
  return model;
}

template <typename Scalar, typename Derived>
MatrixX<Scalar> pca_transform(const PcaModel<Scalar>& model,
                              const Eigen::MatrixBase<Derived>& x) {
  if (x.cols() != model.input_dim()) {
    throw DimensionMismatchError("pca_transform attribute count",
                                 static_cast<std::size_t>(model.input_dim()),
                                 static_cast<std::size_t>(x.cols()));
  }
  return (x.rowwise() - model.mean) * model.components.transpose();
}

}  // namespace somdml
