#include "somdml/som.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>

namespace somdml {

namespace {

constexpr std::uint64_t kShuffleStream = 0x9E3779B97F4A7C15ULL;

}  // namespace

std::string to_string(StopReason reason) {
  return reason == StopReason::CostPlateau ? "cost-plateau" : "epoch-cap";
}

void SomConfig::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("som: grid must be at least 1x1");
  if (!(mu0 > 0.0)) throw ConfigError("som: mu0 must be > 0");
  if (!(lambda > 0.0)) throw ConfigError("som: lambda must be > 0");
  if (!(alpha > 0.0)) throw ConfigError("som: alpha must be > 0");
  if (max_epochs < 1) throw ConfigError("som: max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("som: patience must be >= 1");
  if (!(init_std > 0.0)) throw ConfigError("som: init_std must be > 0");
}

double SomConfig::learning_rate(int epoch) const {
  return mu0 * std::exp(-static_cast<double>(epoch) * lambda);
}

double SomConfig::neighbourhood(double grid_distance) const {
  return std::exp(-alpha * grid_distance);
}

SomGrid som_init(const SomConfig& config, Eigen::Index d,
                 Eigen::Index n_classes) {
  config.validate();
  SomGrid grid;
  grid.rows = config.rows;
  grid.cols = config.cols;
  grid.attributes.resize(grid.neurons(), d);
  grid.classes.resize(grid.neurons(), n_classes);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, config.init_std);
  for (Eigen::Index k = 0; k < grid.neurons(); ++k) {
    for (Eigen::Index j = 0; j < d; ++j) grid.attributes(k, j) = normal(rng);
    for (Eigen::Index j = 0; j < n_classes; ++j) grid.classes(k, j) = normal(rng);
  }
  return grid;
}

GridPos find_bmu(const SomGrid& grid,
                 const Eigen::Ref<const Eigen::RowVectorXd>& x,
                 const Eigen::Ref<const Eigen::RowVectorXd>& y, BmuMode mode) {
  if (x.size() != grid.d()) {
    throw DimensionMismatchError("find_bmu attribute length",
                                 static_cast<std::size_t>(grid.d()),
                                 static_cast<std::size_t>(x.size()));
  }
  if (mode == BmuMode::Train && y.size() != grid.n_classes()) {
    throw DimensionMismatchError("find_bmu class length",
                                 static_cast<std::size_t>(grid.n_classes()),
                                 static_cast<std::size_t>(y.size()));
  }
  Eigen::Index best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < grid.neurons(); ++k) {
    double dist = (grid.attributes.row(k) - x).squaredNorm();
    if (mode == BmuMode::Train) dist += (grid.classes.row(k) - y).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = k;
    }
  }
  return {best / grid.cols, best % grid.cols};
}

GridPos find_bmu(const SomGrid& grid,
                 const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return find_bmu(grid, x, Eigen::RowVectorXd(), BmuMode::Test);
}

void som_update(SomGrid& grid, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                const Eigen::Ref<const Eigen::RowVectorXd>& y, GridPos bmu,
                int epoch, const SomConfig& config) {
  const double mu = config.learning_rate(epoch);
  for (Eigen::Index p = 0; p < grid.rows; ++p) {
    for (Eigen::Index q = 0; q < grid.cols; ++q) {
      const double eta =
          mu * config.neighbourhood(grid_dist(bmu.p, bmu.q, p, q));
      const Eigen::Index k = grid.index(p, q);
      grid.attributes.row(k) += eta * (x - grid.attributes.row(k));
      grid.classes.row(k) += eta * (y - grid.classes.row(k));
    }
  }
}

SomTrainResult som_train(SomGrid grid, const LabeledDataset& data,
                         const SomConfig& config) {
  config.validate();
  if (data.d() != grid.d() || data.n_classes != grid.n_classes()) {
    throw DimensionMismatchError(
        "som_train data/grid dimension",
        static_cast<std::size_t>(grid.d() + grid.n_classes()),
        static_cast<std::size_t>(data.d() + data.n_classes));
  }
  const RowMatrixXd x = data.x;
  const RowMatrixXd y = data.class_matrix();

  // Neighbourhood factors depend only on the integer grid distance.
  const auto max_s = static_cast<std::size_t>(
      grid_dist(0, 0, grid.rows - 1, grid.cols - 1));
  std::vector<double> tau(max_s + 1);
  for (std::size_t s = 0; s <= max_s; ++s) {
    tau[s] = config.neighbourhood(static_cast<double>(s));
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.n()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::mt19937_64 shuffle_rng(config.seed ^ kShuffleStream);

  SomTrainResult out;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const double mu = config.learning_rate(epoch);
    for (Eigen::Index i : order) {
      const GridPos bmu = find_bmu(grid, x.row(i), y.row(i), BmuMode::Train);
      for (Eigen::Index p = 0; p < grid.rows; ++p) {
        for (Eigen::Index q = 0; q < grid.cols; ++q) {
          const double eta = mu * tau[static_cast<std::size_t>(
                                      grid_dist(bmu.p, bmu.q, p, q))];
          const Eigen::Index k = grid.index(p, q);
          grid.attributes.row(k) += eta * (x.row(i) - grid.attributes.row(k));
          grid.classes.row(k) += eta * (y.row(i) - grid.classes.row(k));
        }
      }
    }

    double cost = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      const GridPos bmu = find_bmu(grid, x.row(i), y.row(i), BmuMode::Train);
      const Eigen::Index k = grid.index(bmu.p, bmu.q);
      cost += dist_train(x.row(i), grid.attributes.row(k), y.row(i),
                         grid.classes.row(k));
    }
    if (!std::isfinite(cost)) {
      throw Error("som_diverged", "som_train: cost became non-finite at epoch " +
                                      std::to_string(epoch));
    }
    out.trace.cost_per_epoch.push_back(cost);
    out.trace.epochs_run = epoch + 1;

    if (cost < best - 1e-9) {
      best = cost;
      stale = 0;
    } else {
      ++stale;
    }
    if (!config.strict_epochs && stale >= config.patience) {
      out.trace.stopped_by = StopReason::CostPlateau;
      break;
    }
  }
  out.grid = std::move(grid);
  return out;
}

int som_predict(const SomGrid& grid,
                const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const GridPos bmu = find_bmu(grid, x);
  const auto c = grid.classes.row(grid.index(bmu.p, bmu.q));
  Eigen::Index label = 0;
  for (Eigen::Index j = 1; j < c.size(); ++j) {
    if (c(j) > c(label)) label = j;
  }
  return static_cast<int>(label);
}

double som_evaluate(const SomGrid& grid, const LabeledDataset& data) {
  if (data.n() == 0) {
    throw InvalidInputError("som_evaluate: empty dataset");
  }
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (som_predict(grid, data.x.row(i)) != data.labels[i]) ++wrong;
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(data.n());
}

std::uint64_t grid_hash(const SomGrid& grid) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* bytes, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::int64_t dims[4] = {grid.rows, grid.cols, grid.d(),
                                grid.n_classes()};
  mix(dims, sizeof dims);
  mix(grid.attributes.data(),
      static_cast<std::size_t>(grid.attributes.size()) * sizeof(double));
  mix(grid.classes.data(),
      static_cast<std::size_t>(grid.classes.size()) * sizeof(double));
  return h;
}

}  // namespace somdml
