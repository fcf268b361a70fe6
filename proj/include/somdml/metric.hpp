#pragma once

#include <algorithm>
#include <string>

#include <Eigen/Dense>

#include "somdml/error.hpp"
#include "somdml/numerics.hpp"

namespace somdml {

// A positive-semidefinite Mahalanobis matrix M.
template <typename Scalar>
class MahalanobisMetric {
 public:
  static constexpr double kPsdTolerance = 1e-8;

  MahalanobisMetric() = default;

  // Throws InvalidInputError when the smallest eigenvalue is below
  // -kPsdTolerance * (1 + max|M|).
  explicit MahalanobisMetric(SymMatrix<Scalar> m) : m_(std::move(m)) {
    if (m_.dim() == 0) return;
    const Scalar lowest = min_eigenvalue(m_);
    if (lowest < -Scalar(kPsdTolerance) * (Scalar(1) + max_abs(m_.matrix()))) {
      throw InvalidInputError("metric is not positive semidefinite (min "
                              "eigenvalue " +
                              std::to_string(static_cast<double>(lowest)) +
                              ")");
    }
  }

  static MahalanobisMetric Identity(Eigen::Index dim) {
    return MahalanobisMetric(SymMatrix<Scalar>::Identity(dim), Trusted{});
  }

  // For matrices already produced by project_psd.
  static MahalanobisMetric FromProjected(SymMatrix<Scalar> m) {
    return MahalanobisMetric(std::move(m), Trusted{});
  }

  Eigen::Index dim() const { return m_.dim(); }
  const SymMatrix<Scalar>& sym() const { return m_; }
  const MatrixX<Scalar>& matrix() const { return m_.matrix(); }

 private:
  struct Trusted {};
  MahalanobisMetric(SymMatrix<Scalar> m, Trusted) : m_(std::move(m)) {}

  SymMatrix<Scalar> m_;
};

using MahalanobisMetricd = MahalanobisMetric<double>;

// Squared Mahalanobis distance (xi - xj)^T M (xi - xj), clamped at zero.
template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar mahalanobis_dist(const MahalanobisMetric<Scalar>& metric,
                        const Eigen::MatrixBase<DerivedA>& xi,
                        const Eigen::MatrixBase<DerivedB>& xj) {
  if (xi.size() != metric.dim() || xj.size() != metric.dim()) {
    throw DimensionMismatchError(
        "mahalanobis_dist vector length", static_cast<std::size_t>(metric.dim()),
        static_cast<std::size_t>(xi.size() != metric.dim() ? xi.size()
                                                           : xj.size()));
  }
  const VectorX<Scalar> diff =
      xi.derived().reshaped() - xj.derived().reshaped();
  return std::max(Scalar(0), diff.dot(metric.matrix() * diff));
}

}  // namespace somdml
