#include <doctest.h>

#include <cmath>

#include "lmnn_oracle.hpp"
#include "somdml/lmnn.hpp"
#include "test_util.hpp"

using namespace somdml;
using namespace somdml::testing;

namespace {

LabeledDataset make_dataset(Eigen::MatrixXd x, std::vector<int> labels) {
  LabeledDataset data;
  data.x = std::move(x);
  data.n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  data.labels = std::move(labels);
  return data;
}

LabeledDataset one_dim(std::initializer_list<double> values,
                       std::vector<int> labels) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) x(i++, 0) = v;
  return make_dataset(std::move(x), std::move(labels));
}

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

}  // namespace

TEST_CASE("mahalanobis_dist") {
  const auto identity = MahalanobisMetricd::Identity(2);
  CHECK(mahalanobis_dist(identity, Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4)) == 25.0);

  std::mt19937_64 rng(41);
  const MahalanobisMetricd random(SymMatrixd(random_psd(rng, 3, 3)));
  const Eigen::Vector3d v(0.3, -1.0, 2.0);
  CHECK(mahalanobis_dist(random, v, v) == 0.0);

  const MahalanobisMetricd diag(SymMatrixd(Eigen::Matrix2d(Eigen::Vector2d(2, 1).asDiagonal())));
  // 2 * 1^2 + 1 * 1^2
  CHECK(mahalanobis_dist(diag, Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0)) == 3.0);

  CHECK_THROWS_AS(mahalanobis_dist(identity, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2)),
                  DimensionMismatchError);
  CHECK_THROWS_AS(MahalanobisMetricd(SymMatrixd(Eigen::Matrix2d(Eigen::Vector2d(1, -1).asDiagonal()))),
                  InvalidInputError);
}

TEST_CASE("find_target_neighbors") {
  SUBCASE("collinear points") {
    const LabeledDataset data = one_dim({0.0, 1.0, 3.0}, {0, 0, 0});
    const TargetNeighbors tn = find_target_neighbors(data, 1);
    CHECK(tn.targets[0] == std::vector<Eigen::Index>{1});
    CHECK(tn.targets[1] == std::vector<Eigen::Index>{0});
    CHECK(tn.targets[2] == std::vector<Eigen::Index>{1});
  }
  SUBCASE("two-point class is mutual") {
    const LabeledDataset data = one_dim({0.0, 5.0, 1.0, 9.0, 9.5}, {0, 1, 0, 1, 1});
    const TargetNeighbors tn = find_target_neighbors(data, 1);
    CHECK(tn.targets[0] == std::vector<Eigen::Index>{2});
    CHECK(tn.targets[2] == std::vector<Eigen::Index>{0});
  }
  SUBCASE("ties go to the lower index") {
    const LabeledDataset data = one_dim({0.0, 1.0, -1.0, 7.0, 8.0}, {0, 0, 0, 1, 1});
    CHECK(find_target_neighbors(data, 1).targets[0] == std::vector<Eigen::Index>{1});
  }
  SUBCASE("class too small names the class and its count") {
    LabeledDataset data = one_dim({0.0, 1.0, 2.0, 3.0}, {0, 0, 0, 1});
    data.class_names = {"big", "tiny"};
    try {
      find_target_neighbors(data, 1);
      FAIL("expected error");
    } catch (const DatasetError& e) {
      CHECK(e.kind() == "class_too_small");
      CHECK(std::string(e.what()).find("'tiny' has 1") != std::string::npos);
    }
  }
  SUBCASE("matches the oracle and stays within class") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::MatrixXd x;
      std::vector<int> labels;
      random_instance(rng, 30, 3, 3, x, labels);
      const int k = 1 + trial % 4;
      const TargetNeighbors tn = find_target_neighbors(make_dataset(x, labels), k);
      const auto expected = oracle_targets(x, labels, k);
      for (std::size_t i = 0; i < tn.n(); ++i) {
        for (int t = 0; t < k; ++t) {
          CHECK(tn.targets[i][t] == expected[i][t]);
          CHECK(labels[tn.targets[i][t]] == labels[i]);
        }
      }
    }
  }
}

TEST_CASE("lmnn_loss worked examples") {
  SUBCASE("single class has no impostors") {
    const LabeledDataset data = one_dim({0.0, 1.0, 3.0}, {0, 0, 0});
    const TargetNeighbors tn = find_target_neighbors(data, 1);
    const LmnnLoss l = lmnn_loss(MahalanobisMetricd::Identity(1), data, tn, 0.3);
    // targets 0->1, 1->0, 3->1: squared distances 1 + 1 + 4
    CHECK(l.loss == doctest::Approx(0.7 * 6.0).epsilon(1e-12));
    CHECK(l.active_triplets == 0);
  }
  SUBCASE("zero metric activates every triplet at unit hinge") {
    std::mt19937_64 rng(47);
    Eigen::MatrixXd x;
    std::vector<int> labels;
    random_instance(rng, 9, 2, 3, x, labels);
    const LabeledDataset data = make_dataset(x, labels);
    const TargetNeighbors tn = find_target_neighbors(data, 2);
    const LmnnLoss l = lmnn_loss(MahalanobisMetricd::FromProjected(SymMatrixd::Zero(2)),
                                 data, tn, 0.5);
    const std::size_t triplets = 9 * 2 * 6;  // n * k * (points in other classes)
    CHECK(l.active_triplets == triplets);
    CHECK(l.loss == doctest::Approx(0.5 * triplets));
  }
  SUBCASE("two separated 1-D classes") {
    // A = {0, 0.5}, B = {2, 2.5}, k = 1, M = [4], c = 0.5. Four ordered
    // target pairs, each 4 * 0.25 = 1; the nearest impostor sits at
    // 4 * 1.5^2 = 9 >= 1 + 1, so no hinge is active.
    const LabeledDataset data = one_dim({0.0, 0.5, 2.0, 2.5}, {0, 0, 1, 1});
    const TargetNeighbors tn = find_target_neighbors(data, 1);
    const MahalanobisMetricd m(SymMatrixd(scalar(4.0)));
    const LmnnLoss l = lmnn_loss(m, data, tn, 0.5);
    const OracleLoss o = oracle_loss(scalar(4.0), data.x, data.labels, 1, 0.5);
    CHECK(o.loss == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(l.loss == doctest::Approx(o.loss).epsilon(1e-12));
    CHECK(l.active_triplets == 0);
  }
}

TEST_CASE("lmnn_loss equals the brute-force enumeration") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 3;
    const int n_classes = 2 + trial % 2;
    const int n = std::max(2 * n_classes, 4 + trial % 5);
    Eigen::MatrixXd x;
    std::vector<int> labels;
    random_instance(rng, n, d, n_classes, x, labels);
    const int k = 1;
    const double c = 0.2 + 0.6 * (trial % 4) / 3.0;
    const Eigen::MatrixXd m = random_psd(rng, d, 1 + trial % d);
    const LabeledDataset data = make_dataset(x, labels);
    const LmnnLoss l = lmnn_loss(MahalanobisMetricd::FromProjected(SymMatrixd(m)), data,
                                 find_target_neighbors(data, k), c);
    const OracleLoss o = oracle_loss(m, x, labels, k, c);
    CHECK(std::abs(l.loss - o.loss) <= 1e-10 * std::max(1.0, std::abs(o.loss)));
    CHECK(static_cast<long>(l.active_triplets) == o.active);
  }
}

TEST_CASE("lmnn_gradient") {
  SUBCASE("pull-only gradient is a sum of outer products") {
    const LabeledDataset data = make_dataset(
        (Eigen::MatrixXd(2, 2) << 0.0, 0.0, 1.0, 2.0).finished(), {0, 0});
    const TargetNeighbors tn = find_target_neighbors(data, 1);
    const Eigen::Vector2d u(1.0, 2.0);
    const SymMatrixd g = lmnn_gradient(MahalanobisMetricd::Identity(2), data, tn, 0.25);
    // Two ordered target pairs (0->1, 1->0) share the same difference.
    CHECK(max_abs(g.matrix() - 2.0 * 0.75 * u * u.transpose()) <= 1e-12);
  }
  SUBCASE("inactive hinges leave only the pull term") {
    const LabeledDataset data = one_dim({0.0, 0.5, 20.0, 20.5}, {0, 0, 1, 1});
    const TargetNeighbors tn = find_target_neighbors(data, 1);
    const SymMatrixd g = lmnn_gradient(MahalanobisMetricd::Identity(1), data, tn, 0.5);
    CHECK(g(0, 0) == doctest::Approx(0.5 * 4 * 0.25).epsilon(1e-12));
  }
  SUBCASE("matches central finite differences") {
    std::mt19937_64 rng(59);
    int checked = 0;
    for (int trial = 0; trial < 40 && checked < 20; ++trial) {
      Eigen::MatrixXd x;
      std::vector<int> labels;
      random_instance(rng, 6, 1 + trial % 3, 2, x, labels);
      const Eigen::Index d = x.cols();
      const Eigen::MatrixXd m = random_psd(rng, d, d) + Eigen::MatrixXd::Identity(d, d) * 0.1;
      if (oracle_loss(m, x, labels, 1, 0.5).min_abs_hinge < 1e-3) continue;
      const LabeledDataset data = make_dataset(x, labels);
      LmnnObjective objective(data, find_target_neighbors(data, 1), 0.5);
      const Eigen::MatrixXd g = objective.gradient(m);
      const double h = 1e-6;
      for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b < d; ++b) {
          Eigen::MatrixXd plus = m;
          Eigen::MatrixXd minus = m;
          plus(a, b) += h;
          minus(a, b) -= h;
          const double fd = (oracle_loss(plus, x, labels, 1, 0.5).loss -
                             oracle_loss(minus, x, labels, 1, 0.5).loss) /
                            (2 * h);
          CHECK(std::abs(fd - g(a, b)) <= 1e-4 * std::max(1.0, std::abs(g(a, b))));
        }
      }
      ++checked;
    }
    CHECK(checked == 20);
  }
}

TEST_CASE("lmnn_fit on a 1-D two-class instance") {
  const LabeledDataset data = one_dim({0.0, 0.5, 1.2, 1.6, 2.0, 2.5}, {0, 0, 1, 1, 0, 1});
  LmnnConfig config;
  config.k = 1;
  config.step_size = 1e-3;
  const LmnnResult fit = lmnn_fit(data, config);
  const double initial = oracle_loss(scalar(1.0), data.x, data.labels, 1, 0.5).loss;
  CHECK(fit.initial_loss() == doctest::Approx(initial).epsilon(1e-12));
  CHECK(fit.final_loss() <= initial);
  CHECK(fit.metric.matrix()(0, 0) >= 0.0);
  const double recomputed =
      oracle_loss(fit.metric.matrix(), data.x, data.labels, 1, 0.5).loss;
  CHECK(recomputed == doctest::Approx(fit.final_loss()).epsilon(1e-9));
}

TEST_CASE("lmnn_fit invariants on random problems") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd x;
    std::vector<int> labels;
    random_instance(rng, 30, 2 + trial % 4, 2 + trial % 3, x, labels);
    LmnnConfig config;
    config.k = 1 + trial % 3;
    config.max_iters = 200;
    config.step_size = 1e-4;
    const LmnnResult fit = lmnn_fit(make_dataset(x, labels), config);
    REQUIRE(fit.loss_trace.size() == fit.min_eigenvalues.size());
    for (std::size_t i = 1; i < fit.loss_trace.size(); ++i) {
      CHECK(fit.loss_trace[i] <= fit.loss_trace[i - 1]);
      CHECK(fit.min_eigenvalues[i] >= -1e-8);
    }
    CHECK(min_eigenvalue(fit.metric.sym()) >= -1e-8);
    CHECK(fit.final_loss() <= fit.initial_loss());
  }
}

TEST_CASE("lmnn_fit with classes already separated by the margin") {
  // Impostors sit >= 10 units away; the push term never activates.
  const LabeledDataset data = make_dataset(
      (Eigen::MatrixXd(6, 2) << 0, 0, 1, 0, 0, 1, 10, 10, 11, 10, 10, 11).finished(),
      {0, 0, 0, 1, 1, 1});
  LmnnConfig config;
  config.k = 2;
  config.step_size = 1e-3;
  config.max_iters = 50;
  const LmnnResult fit = lmnn_fit(data, config);
  CHECK(fit.active_triplets == 0);
  CHECK(fit.final_loss() < fit.initial_loss());
  CHECK(min_eigenvalue(fit.metric.sym()) >= -1e-8);
}

TEST_CASE("lmnn_fit nearest-neighbour structure is scale invariant") {
  std::mt19937_64 rng(67);
  Eigen::MatrixXd x;
  std::vector<int> labels;
  random_instance(rng, 24, 3, 2, x, labels);
  LmnnConfig config;
  config.k = 2;
  config.step_size = 1e-3;
  config.max_iters = 3000;
  config.tol = 1e-10;
  const LmnnResult base = lmnn_fit(make_dataset(x, labels), config);
  const LmnnResult doubled = lmnn_fit(make_dataset(2.0 * x, labels), config);

  // Returns (nearest index, relative gap to the runner-up).
  auto nearest = [](const Eigen::MatrixXd& pts, const Eigen::MatrixXd& m, Eigen::Index i) {
    std::vector<std::pair<double, Eigen::Index>> dists;
    for (Eigen::Index j = 0; j < pts.rows(); ++j) {
      if (j == i) continue;
      const Eigen::VectorXd u = (pts.row(i) - pts.row(j)).transpose();
      dists.emplace_back(u.dot(m * u), j);
    }
    std::sort(dists.begin(), dists.end());
    return std::make_pair(dists[0].second,
                          (dists[1].first - dists[0].first) / dists[1].first);
  };
  // The solver stops near, not at, the minimizer, so only unambiguous
  // neighbours are compared.
  int compared = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto [a, gap] = nearest(x, base.metric.matrix(), i);
    if (gap < 0.1) continue;
    ++compared;
    CHECK(a == nearest(2.0 * x, doubled.metric.matrix(), i).first);
  }
  CHECK(compared >= x.rows() / 2);
  CHECK(doubled.final_loss() == doctest::Approx(base.final_loss()).epsilon(1e-3));
}

TEST_CASE("lmnn config validation") {
  LmnnConfig config;
  config.c = 1.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  config.k = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  config.step_size = 0.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
}
