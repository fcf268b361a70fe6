#include "somdml/lmnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SparseCore>

#include "somdml/error.hpp"

namespace somdml {

TargetNeighbors find_target_neighbors(const LabeledDataset& data, int k) {
  if (k < 1) throw InvalidInputError("target neighbours: k must be >= 1");
  const std::vector<Eigen::Index> counts = data.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < k + 1) {
      const std::string name =
          c < data.class_names.size() ? data.class_names[c] : std::to_string(c);
      throw DatasetError("class_too_small",
                         "class '" + name + "' has " +
                             std::to_string(counts[c]) +
                             " sample(s); k=" + std::to_string(k) +
                             " target neighbours need at least " +
                             std::to_string(k + 1));
    }
  }

  TargetNeighbors tn;
  tn.k = k;
  tn.targets.resize(static_cast<std::size_t>(data.n()));
  std::vector<std::pair<double, Eigen::Index>> candidates;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    candidates.clear();
    for (Eigen::Index j = 0; j < data.n(); ++j) {
      if (j == i || data.labels[j] != data.labels[i]) continue;
      candidates.emplace_back((data.x.row(i) - data.x.row(j)).squaredNorm(), j);
    }
    std::partial_sort(candidates.begin(), candidates.begin() + k,
                      candidates.end());
    auto& out = tn.targets[static_cast<std::size_t>(i)];
    for (int t = 0; t < k; ++t) out.push_back(candidates[t].second);
  }
  return tn;
}

void LmnnConfig::validate() const {
  if (k < 1) throw ConfigError("lmnn: k must be >= 1");
  if (!(c > 0.0 && c < 1.0)) throw ConfigError("lmnn: c must lie in (0, 1)");
  if (!(step_size > 0.0)) throw ConfigError("lmnn: step_size must be > 0");
  if (max_iters < 1) throw ConfigError("lmnn: max_iters must be >= 1");
  if (!(tol >= 0.0)) throw ConfigError("lmnn: tol must be >= 0");
  if (max_retries < 0) throw ConfigError("lmnn: max_retries must be >= 0");
  if (patience < 1) throw ConfigError("lmnn: patience must be >= 1");
}

LmnnObjective::LmnnObjective(const LabeledDataset& data,
                             TargetNeighbors targets, double c)
    : x_(data.x.rowwise() - data.x.colwise().mean()),
      labels_(data.labels),
      targets_(std::move(targets)),
      c_(c) {
  if (targets_.n() != static_cast<std::size_t>(data.n())) {
    throw DimensionMismatchError("LmnnObjective target list length",
                                 static_cast<std::size_t>(data.n()),
                                 targets_.n());
  }
}

void LmnnObjective::compute_distances(const Eigen::MatrixXd& m) const {
  if (m.rows() != x_.cols() || m.cols() != x_.cols()) {
    throw DimensionMismatchError("LmnnObjective metric dimension",
                                 static_cast<std::size_t>(x_.cols()),
                                 static_cast<std::size_t>(m.rows()));
  }
  // u^T M u only sees the symmetric part of M.
  const Eigen::MatrixXd sym = (m + m.transpose()) * 0.5;
  const Eigen::MatrixXd xm = x_ * sym;
  const Eigen::VectorXd q = (xm.array() * x_.array()).rowwise().sum();
  dist_.resize(x_.rows(), x_.rows());
  dist_.noalias() = xm * x_.transpose();
  // D(a, b) = q_a + q_b - 2 G_ab
  dist_ *= -2.0;
  dist_.colwise() += q;
  dist_.rowwise() += q.transpose();
}

LmnnLoss LmnnObjective::accumulate(bool with_weights) const {
  LmnnLoss out;
  const Eigen::Index n = x_.rows();
  const double pull_weight = 1.0 - c_;
  if (with_weights) weights_.setZero(n, n);
  // Column i of the symmetric distance matrix is contiguous; weights are
  // stored transposed (W^T), which the gradient symmetrizes away.
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = labels_[static_cast<std::size_t>(i)];
    const double* di = dist_.col(i).data();
    double* wi = with_weights ? weights_.col(i).data() : nullptr;
    for (Eigen::Index j : targets_.targets[static_cast<std::size_t>(i)]) {
      const double dij = di[j];
      out.pull += dij;
      double wij = pull_weight;
      for (Eigen::Index l = 0; l < n; ++l) {
        if (labels_[static_cast<std::size_t>(l)] == label) continue;
        const double hinge = 1.0 + dij - di[l];
        if (hinge > 0.0) {
          out.push += hinge;
          ++out.active_triplets;
          if (wi) {
            wij += c_;
            wi[l] -= c_;
          }
        }
      }
      if (wi) wi[j] += wij;
    }
  }
  out.loss = pull_weight * out.pull + c_ * out.push;
  return out;
}

LmnnLoss LmnnObjective::loss(const Eigen::MatrixXd& m) const {
  compute_distances(m);
  return accumulate(false);
}

LmnnLoss LmnnObjective::loss_and_gradient(const Eigen::MatrixXd& m,
                                          Eigen::MatrixXd& gradient) const {
  compute_distances(m);
  const LmnnLoss out = accumulate(true);
  // sum_ab W_ab (x_a - x_b)(x_a - x_b)^T
  //   = X^T diag(W 1 + W^T 1) X - T - T^T,  T = X^T W X
  const Eigen::VectorXd degree =
      weights_.rowwise().sum() + weights_.colwise().sum().transpose();
  const Eigen::Index n = x_.rows();
  const Eigen::Index nnz = (weights_.array() != 0.0).count();
  Eigen::MatrixXd wx;
  if (nnz * 8 < n * n) {
    const Eigen::SparseMatrix<double> sparse = weights_.sparseView();
    wx = sparse * x_;
  } else {
    wx.noalias() = weights_ * x_;
  }
  const Eigen::MatrixXd t = x_.transpose() * wx;
  gradient = x_.transpose() * degree.asDiagonal() * x_;
  gradient -= t;
  gradient -= t.transpose();
  gradient = (gradient + gradient.transpose()) * 0.5;
  return out;
}

Eigen::MatrixXd LmnnObjective::gradient(const Eigen::MatrixXd& m) const {
  Eigen::MatrixXd g;
  loss_and_gradient(m, g);
  return g;
}

LmnnLoss lmnn_loss(const MahalanobisMetricd& m, const LabeledDataset& data,
                   const TargetNeighbors& tn, double c) {
  return LmnnObjective(data, tn, c).loss(m.matrix());
}

SymMatrixd lmnn_gradient(const MahalanobisMetricd& m,
                         const LabeledDataset& data, const TargetNeighbors& tn,
                         double c) {
  return SymMatrixd(LmnnObjective(data, tn, c).gradient(m.matrix()));
}

LmnnResult lmnn_fit(const LabeledDataset& data, const LmnnConfig& config) {
  config.validate();
  const LmnnObjective objective(data, find_target_neighbors(data, config.k),
                                config.c);
  const Eigen::Index d = data.d();

  SymMatrixd m = SymMatrixd::Identity(d);
  Eigen::MatrixXd grad;
  LmnnLoss current = objective.loss_and_gradient(m.matrix(), grad);

  LmnnResult result;
  result.loss_trace.push_back(current.loss);
  result.min_eigenvalues.push_back(1.0);
  result.stop_reason = "max_iters";

  double step = config.step_size;
  int quiet = 0;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    bool accepted = false;
    SymMatrixd trial;
    LmnnLoss trial_loss;
    Eigen::MatrixXd trial_grad;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
      trial = project_psd(SymMatrixd(m.matrix() - step * grad));
      trial_loss = objective.loss_and_gradient(trial.matrix(), trial_grad);
      if (trial_loss.loss <= current.loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    result.iterations = iter + 1;
    if (!accepted) {
      result.converged = true;
      result.stop_reason = "step_exhausted";
      break;
    }

    const double change = (current.loss - trial_loss.loss) /
                          std::max(std::abs(current.loss), 1e-300);
    m = std::move(trial);
    current = trial_loss;
    grad.swap(trial_grad);
    result.loss_trace.push_back(current.loss);
    result.min_eigenvalues.push_back(min_eigenvalue(m));
    step *= 1.1;

    quiet = change < config.tol ? quiet + 1 : 0;
    if (quiet >= config.patience) {
      result.converged = true;
      result.stop_reason = "tolerance";
      break;
    }
  }

  result.active_triplets = current.active_triplets;
  result.metric = MahalanobisMetricd::FromProjected(std::move(m));
  return result;
}

}  // namespace somdml
