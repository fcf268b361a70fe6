#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "somdml/dataset.hpp"
#include "somdml/metric.hpp"
#include "somdml/numerics.hpp"

namespace somdml {

// For each sample i, the k nearest same-class samples under Euclidean
// distance (ties to the lower index). Fixed for the whole optimization.
struct TargetNeighbors {
  int k = 0;
  std::vector<std::vector<Eigen::Index>> targets;

  std::size_t n() const { return targets.size(); }
};

TargetNeighbors find_target_neighbors(const LabeledDataset& data, int k);

struct LmnnConfig {
  int k = 3;
  double c = 0.5;            // push weight; the pull term is weighted 1 - c
  double step_size = 1e-7;   // initial step, grown x1.1 / halved adaptively
  int max_iters = 1000;
  double tol = 1e-7;         // relative loss change, 3 iterations in a row
  int max_retries = 20;      // step halvings per iteration
  int patience = 3;

  void validate() const;
};

struct LmnnLoss {
  double loss = 0.0;
  double pull = 0.0;  // unweighted sum of target distances
  double push = 0.0;  // unweighted sum of hinge terms
  std::size_t active_triplets = 0;
};

// Loss and gradient of the LMNN objective for an arbitrary square matrix M
//
//   (1 - c) sum_{i, j in T(i)} D(i, j)
//     + c sum_{i, j in T(i), l: y_l != y_i} max(0, 1 + D(i, j) - D(i, l))
//
// with D(a, b) = (x_a - x_b)^T M (x_a - x_b). Distances come from the Gram
// matrix of the centred data, so one evaluation costs O(n^2 d). Evaluations
// reuse internal n x n buffers; one objective must not be evaluated from
// several threads at once.
class LmnnObjective {
 public:
  LmnnObjective(const LabeledDataset& data, TargetNeighbors targets, double c);

  LmnnLoss loss(const Eigen::MatrixXd& m) const;
  // Hinges that are exactly zero contribute nothing.
  Eigen::MatrixXd gradient(const Eigen::MatrixXd& m) const;
  LmnnLoss loss_and_gradient(const Eigen::MatrixXd& m,
                             Eigen::MatrixXd& gradient) const;

  Eigen::Index dim() const { return x_.cols(); }
  const TargetNeighbors& targets() const { return targets_; }

 private:
  void compute_distances(const Eigen::MatrixXd& m) const;
  LmnnLoss accumulate(bool with_weights) const;

  Eigen::MatrixXd x_;  // centred attributes
  std::vector<int> labels_;
  TargetNeighbors targets_;
  double c_;
  mutable Eigen::MatrixXd dist_;
  mutable Eigen::MatrixXd weights_;
};

LmnnLoss lmnn_loss(const MahalanobisMetricd& m, const LabeledDataset& data,
                   const TargetNeighbors& tn, double c);
SymMatrixd lmnn_gradient(const MahalanobisMetricd& m,
                         const LabeledDataset& data, const TargetNeighbors& tn,
                         double c);

struct LmnnResult {
  MahalanobisMetricd metric;
  // Loss at the identity start followed by the loss after every accepted
  // step; min_eigenvalues[i] is measured on the matrix behind loss_trace[i].
  std::vector<double> loss_trace;
  std::vector<double> min_eigenvalues;
  std::size_t active_triplets = 0;
  int iterations = 0;
  bool converged = false;
  // "tolerance", "step_exhausted" or "max_iters"
  std::string stop_reason;

  double initial_loss() const { return loss_trace.front(); }
  double final_loss() const { return loss_trace.back(); }
};

// Projected gradient descent from M = I. Each step is projected onto the
// PSD cone; a step that raises the loss is halved and retried.
LmnnResult lmnn_fit(const LabeledDataset& data, const LmnnConfig& config);

}  // namespace somdml
