#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "somdml/dataset.hpp"
#include "somdml/error.hpp"
#include "test_util.hpp"

using namespace somdml;

namespace {

const std::filesystem::path kDataDir = SOMDML_DATA_DIR;

std::filesystem::path write_temp(const std::string& name,
                                 const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << contents;
  return path;
}

LabeledDataset random_dataset(std::mt19937_64& rng, Eigen::Index n,
                              Eigen::Index d, int n_classes) {
  LabeledDataset data;
  data.x = somdml::testing::random_matrix(rng, n, d);
  data.n_classes = n_classes;
  for (Eigen::Index i = 0; i < n; ++i) {
    data.labels.push_back(static_cast<int>(i % n_classes));
  }
  for (int c = 0; c < n_classes; ++c) data.class_names.push_back(std::to_string(c));
  return data;
}

}  // namespace

TEST_CASE("load_csv reads a minimal two-class file") {
  const auto path = write_temp("somdml_min.csv", "1,0,A\n0,1,B\n");
  const LabeledDataset data = load_csv(path);
  CHECK(data.n() == 2);
  CHECK(data.d() == 2);
  CHECK(data.x == Eigen::Matrix2d::Identity());
  CHECK(data.labels == std::vector<int>{0, 1});
  CHECK(data.class_names == std::vector<std::string>{"A", "B"});
}

TEST_CASE("load_csv maps categorical labels by first appearance") {
  const auto path = write_temp("somdml_cat.csv", "x,label\n1,zeta\n2,alpha\n3,zeta\n");
  const LabeledDataset data = load_csv(path, {LabelColumn::last(), true});
  CHECK(data.labels == std::vector<int>{0, 1, 0});
  CHECK(data.class_names == std::vector<std::string>{"zeta", "alpha"});
}

TEST_CASE("load_csv orders integer labels by value and honours the label column") {
  const auto path = write_temp("somdml_int.csv", "7,1.5\n3,2.5\n7,0.5\n");
  const LabeledDataset data = load_csv(path, {LabelColumn::index(0), false});
  CHECK(data.labels == std::vector<int>{1, 0, 1});
  CHECK(data.class_names == std::vector<std::string>{"3", "7"});
  CHECK(data.d() == 1);
  CHECK(data.x(2, 0) == 0.5);
}

TEST_CASE("load_csv error variants carry positions") {
  SUBCASE("missing file") {
    try {
      load_csv("/nonexistent/somdml.csv");
      FAIL("expected error");
    } catch (const DatasetError& e) {
      CHECK(e.kind() == "file_not_found");
    }
  }
  SUBCASE("ragged row") {
    const auto path = write_temp("somdml_ragged.csv", "1,2,3,A\n4,5,6,B\n7,8,C\n1,1,1,A\n");
    try {
      load_csv(path);
      FAIL("expected error");
    } catch (const DatasetError& e) {
      CHECK(e.kind() == "ragged_row");
      CHECK(e.row() == 3);
    }
  }
  SUBCASE("unparseable cell") {
    const auto path = write_temp("somdml_bad.csv", "h1,h2,y\n1,2,A\n1,oops,B\n");
    try {
      load_csv(path, {LabelColumn::last(), true});
      FAIL("expected error");
    } catch (const DatasetError& e) {
      CHECK(e.kind() == "unparseable_cell");
      CHECK(e.row() == 3);
      CHECK(e.column() == 1);
    }
  }
  SUBCASE("non-finite cell") {
    const auto path = write_temp("somdml_inf.csv", "1,inf,A\n1,2,B\n");
    CHECK_THROWS_AS(load_csv(path), DatasetError);
  }
  SUBCASE("single class") {
    const auto path = write_temp("somdml_single.csv", "1,2,A\n3,4,A\n");
    try {
      load_csv(path);
      FAIL("expected error");
    } catch (const DatasetError& e) {
      CHECK(e.kind() == "single_class");
    }
  }
}

TEST_CASE("bundled datasets have the expected shapes") {
  const LabeledDataset iris = load_csv(kDataDir / "iris.csv", {LabelColumn::last(), true});
  CHECK(iris.n() == 150);
  CHECK(iris.d() == 4);
  CHECK(iris.n_classes == 3);

  const LabeledDataset wine = load_csv(kDataDir / "wine.csv", {LabelColumn::last(), true});
  CHECK(wine.n() == 178);
  CHECK(wine.d() == 13);
  CHECK(wine.n_classes == 3);

  const LabeledDataset iono =
      load_csv(kDataDir / "ionosphere.csv", {LabelColumn::last(), true});
  CHECK(iono.n() == 351);
  CHECK(iono.d() == 34);
  CHECK(iono.n_classes == 2);
}

TEST_CASE("one_hot") {
  CHECK(one_hot(1, 3) == Eigen::Vector3d(0, 1, 0));
  CHECK(one_hot(0, 2) == Eigen::Vector2d(1, 0));
  const Eigen::VectorXd last = one_hot(39, 40);
  CHECK(last.size() == 40);
  CHECK(last(39) == 1.0);
  CHECK(last.sum() == 1.0);
  CHECK_THROWS_AS(one_hot(3, 3), InvalidInputError);
  CHECK_THROWS_AS(one_hot(-1, 3), InvalidInputError);

  for (int n_classes = 2; n_classes < 12; ++n_classes) {
    for (int label = 0; label < n_classes; ++label) {
      Eigen::Index arg = -1;
      one_hot(label, n_classes).maxCoeff(&arg);
      CHECK(arg == label);
    }
  }
}

TEST_CASE("split sizes match the benchmark tables") {
  const LabeledDataset iris = load_csv(kDataDir / "iris.csv", {LabelColumn::last(), true});
  const SplitDataset s = split(iris, 0.7, 1);
  CHECK(s.train.n() == 105);
  CHECK(s.test.n() == 45);

  const LabeledDataset wine = load_csv(kDataDir / "wine.csv", {LabelColumn::last(), true});
  const SplitDataset w = split(wine, 0.7, 1);
  CHECK(w.train.n() == 126);
  CHECK(w.test.n() == 52);

  const SplitDataset plain = split(wine, 0.7, 1, false);
  CHECK(plain.train.n() == 125);  // round(0.7 * 178)
}

TEST_CASE("split is deterministic and partitions the source") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const LabeledDataset data = random_dataset(rng, 20 + trial * 3, 3, 2 + trial % 4);
    const bool stratified = trial % 2 == 0;
    const SplitDataset a = split(data, 0.7, 100 + trial, stratified);
    const SplitDataset b = split(data, 0.7, 100 + trial, stratified);
    CHECK(a.train_rows == b.train_rows);
    CHECK(a.train.x == b.train.x);
    CHECK(a.test.x == b.test.x);

    std::vector<Eigen::Index> all = a.train_rows;
    all.insert(all.end(), a.test_rows.begin(), a.test_rows.end());
    std::sort(all.begin(), all.end());
    std::vector<Eigen::Index> expected(static_cast<std::size_t>(data.n()));
    std::iota(expected.begin(), expected.end(), Eigen::Index(0));
    CHECK(all == expected);
    CHECK(a.train.d() == a.test.d());
    CHECK(a.train.n_classes == a.test.n_classes);

    if (stratified) {
      const auto total = data.class_counts();
      const auto train = a.train.class_counts();
      for (std::size_t c = 0; c < total.size(); ++c) {
        const double ideal = 0.7 * static_cast<double>(total[c]);
        CHECK(std::abs(static_cast<double>(train[c]) - ideal) <= 1.0);
      }
    }
  }
}

TEST_CASE("stratified split needs two samples per class") {
  LabeledDataset data;
  data.x = Eigen::MatrixXd::Zero(3, 1);
  data.labels = {0, 0, 1};
  data.n_classes = 2;
  CHECK_THROWS_AS(split(data, 0.7, 1), DatasetError);
  CHECK_NOTHROW(split(data, 0.7, 1, false));
  CHECK_THROWS_AS(split(data, 1.0, 1, false), InvalidInputError);
}

TEST_CASE("standardizer") {
  LabeledDataset data;
  data.x.resize(2, 2);
  data.x << 2.0, 5.0, 4.0, 5.0;
  data.labels = {0, 1};
  data.n_classes = 2;
  const Standardizer s = fit_standardizer(data);
  CHECK(s.means(0) == 3.0);
  CHECK(s.scales(0) == 1.0);
  CHECK(s.scales(1) == 1.0);  // constant column
  const LabeledDataset out = apply_standardizer(s, data);
  CHECK(out.x(0, 0) == -1.0);
  CHECK(out.x(1, 0) == 1.0);
  CHECK(out.x(0, 1) == 0.0);

  std::mt19937_64 rng(5);
  const LabeledDataset random = random_dataset(rng, 40, 6, 2);
  LabeledDataset shifted = random;
  shifted.x = (random.x * 7.0).array() + 3.0;
  const LabeledDataset z = apply_standardizer(fit_standardizer(shifted), shifted);
  for (Eigen::Index j = 0; j < z.d(); ++j) {
    CHECK(std::abs(z.x.col(j).mean()) <= 1e-10);
    const double var = z.x.col(j).squaredNorm() / static_cast<double>(z.n());
    CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK_THROWS_AS(apply_standardizer(s, Eigen::MatrixXd::Zero(1, 3)), DimensionMismatchError);
}
