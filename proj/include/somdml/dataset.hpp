#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace somdml {

// Attribute rows with integer class labels in [0, n_classes).
struct LabeledDataset {
  Eigen::MatrixXd x;
  std::vector<int> labels;
  int n_classes = 0;
  // class_names[k] is the CSV label text that maps to class k.
  std::vector<std::string> class_names;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index d() const { return x.cols(); }

  // One-hot class vectors, one row per sample.
  Eigen::MatrixXd class_matrix() const;
  std::vector<Eigen::Index> class_counts() const;
  LabeledDataset subset(const std::vector<Eigen::Index>& rows) const;
  LabeledDataset with_attributes(Eigen::MatrixXd attributes) const;

  // Throws DatasetError when labels, class count or attributes are invalid.
  void validate() const;
};

struct SplitDataset {
  LabeledDataset train;
  LabeledDataset test;
  std::vector<Eigen::Index> train_rows;  // indices into the source set
  std::vector<Eigen::Index> test_rows;
};

class LabelColumn {
 public:
  static LabelColumn last() { return LabelColumn(std::nullopt); }
  static LabelColumn index(std::size_t column) { return LabelColumn(column); }
  // Accepts "last" or a non-negative integer.
  static LabelColumn parse(const std::string& text);

  std::size_t resolve(std::size_t n_columns) const {
    return column_ ? *column_ : n_columns - 1;
  }
  std::string to_string() const {
    return column_ ? std::to_string(*column_) : "last";
  }

 private:
  explicit LabelColumn(std::optional<std::size_t> column) : column_(column) {}
  std::optional<std::size_t> column_;
};

struct CsvOptions {
  LabelColumn label_column = LabelColumn::last();
  bool has_header = false;
};

// Integer labels are ordered by value; any non-integer label switches the
// whole column to categorical mode, ordered by first appearance.
LabeledDataset load_csv(const std::filesystem::path& path,
                        const CsvOptions& options = {});

Eigen::VectorXd one_hot(int label, int n_classes);

// Stratified: each class puts floor((1 - f) * n_c) rows in test and the
// remainder in train. Plain: round(f * n) rows in train overall.
SplitDataset split(const LabeledDataset& data, double train_fraction,
                   std::uint64_t seed, bool stratified = true);

struct Standardizer {
  Eigen::RowVectorXd means;
  Eigen::RowVectorXd scales;  // population std, zeros replaced by 1
};

Standardizer fit_standardizer(const LabeledDataset& data);
LabeledDataset apply_standardizer(const Standardizer& s,
                                  const LabeledDataset& data);
Eigen::MatrixXd apply_standardizer(const Standardizer& s,
                                   const Eigen::MatrixXd& x);

}  // namespace somdml
