#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "somdml/dataset.hpp"
#include "somdml/error.hpp"

namespace somdml {

struct SomConfig {
  Eigen::Index rows = 4;
  Eigen::Index cols = 4;
  double mu0 = 0.01;
  double lambda = 0.005;
  double alpha = 0.1;
  int max_epochs = 400;
  int patience = 10;
  double init_std = 0.5;
  std::uint64_t seed = 0;
  // Ignore the cost plateau and always run max_epochs.
  bool strict_epochs = false;

  void validate() const;
  double learning_rate(int epoch) const;
  double neighbourhood(double grid_distance) const;
};

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Supervised map: neuron (p, q) holds W = [A; C], stored as row p * cols + q
// of `attributes` and `classes`.
struct SomGrid {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  RowMatrixXd attributes;
  RowMatrixXd classes;

  Eigen::Index neurons() const { return rows * cols; }
  Eigen::Index d() const { return attributes.cols(); }
  Eigen::Index n_classes() const { return classes.cols(); }
  Eigen::Index index(Eigen::Index p, Eigen::Index q) const {
    return p * cols + q;
  }
};

struct GridPos {
  Eigen::Index p = 0;
  Eigen::Index q = 0;
  friend bool operator==(const GridPos&, const GridPos&) = default;
};

enum class BmuMode { Train, Test };

enum class StopReason { CostPlateau, EpochCap };
std::string to_string(StopReason reason);

struct TrainTrace {
  std::vector<double> cost_per_epoch;
  int epochs_run = 0;
  StopReason stopped_by = StopReason::EpochCap;
};

SomGrid som_init(const SomConfig& config, Eigen::Index d,
                 Eigen::Index n_classes);

template <typename X, typename A, typename Y, typename C>
double dist_train(const Eigen::MatrixBase<X>& x, const Eigen::MatrixBase<A>& a,
                  const Eigen::MatrixBase<Y>& y,
                  const Eigen::MatrixBase<C>& c) {
  if (x.size() != a.size() || y.size() != c.size()) {
    throw DimensionMismatchError(
        "dist_train", static_cast<std::size_t>(x.size() != a.size() ? a.size()
                                                                    : c.size()),
        static_cast<std::size_t>(x.size() != a.size() ? x.size() : y.size()));
  }
  return (x.derived().reshaped() - a.derived().reshaped()).squaredNorm() +
         (y.derived().reshaped() - c.derived().reshaped()).squaredNorm();
}

inline double grid_dist(Eigen::Index bi, Eigen::Index bj, Eigen::Index p,
                        Eigen::Index q) {
  const auto dp = static_cast<double>(bi - p);
  const auto dq = static_cast<double>(bj - q);
  return dp * dp + dq * dq;
}

// Train mode minimizes ||x - A||^2 + ||y - C||^2, test mode ||x - A||^2
// only; `y` is ignored in test mode. Ties go to the first neuron in
// row-major order.
GridPos find_bmu(const SomGrid& grid, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                 const Eigen::Ref<const Eigen::RowVectorXd>& y, BmuMode mode);
GridPos find_bmu(const SomGrid& grid,
                 const Eigen::Ref<const Eigen::RowVectorXd>& x);

// Moves every neuron toward (x, y) by eta = mu0 e^{-t lambda} e^{-alpha S}.
void som_update(SomGrid& grid, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                const Eigen::Ref<const Eigen::RowVectorXd>& y, GridPos bmu,
                int epoch, const SomConfig& config);

struct SomTrainResult {
  SomGrid grid;
  TrainTrace trace;
};

// Online training with a seeded per-epoch shuffle; the cost is the summed
// training distance to each sample's BMU after the epoch's updates.
SomTrainResult som_train(SomGrid grid, const LabeledDataset& data,
                         const SomConfig& config);

int som_predict(const SomGrid& grid,
                const Eigen::Ref<const Eigen::RowVectorXd>& x);

// Percentage of misclassified samples.
double som_evaluate(const SomGrid& grid, const LabeledDataset& data);

// FNV-1a over dimensions and weight bytes.
std::uint64_t grid_hash(const SomGrid& grid);

}  // namespace somdml
