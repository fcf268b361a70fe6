#include "somdml/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "somdml/error.hpp"

namespace somdml {

namespace {

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(const std::string& text, T& value) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace

LabelColumn LabelColumn::parse(const std::string& text) {
  if (text == "last") return last();
  std::size_t column = 0;
  if (!parse_number(text, column)) {
    throw ConfigError("label column must be 'last' or an index, got '" +
                      text + "'");
  }
  return index(column);
}

Eigen::MatrixXd LabeledDataset::class_matrix() const {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n(), n_classes);
  for (Eigen::Index i = 0; i < n(); ++i) y(i, labels[i]) = 1.0;
  return y;
}

std::vector<Eigen::Index> LabeledDataset::class_counts() const {
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(n_classes), 0);
  for (int label : labels) ++counts[static_cast<std::size_t>(label)];
  return counts;
}

LabeledDataset LabeledDataset::subset(
    const std::vector<Eigen::Index>& rows) const {
  LabeledDataset out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), d());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
  }
  out.n_classes = n_classes;
  out.class_names = class_names;
  return out;
}

LabeledDataset LabeledDataset::with_attributes(
    Eigen::MatrixXd attributes) const {
  if (attributes.rows() != n()) {
    throw DimensionMismatchError("with_attributes row count",
                                 static_cast<std::size_t>(n()),
                                 static_cast<std::size_t>(attributes.rows()));
  }
  LabeledDataset out;
  out.x = std::move(attributes);
  out.labels = labels;
  out.n_classes = n_classes;
  out.class_names = class_names;
  return out;
}

void LabeledDataset::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != n()) {
    throw DatasetError("label_count", "label count does not match row count");
  }
  if (n_classes < 2) {
    throw DatasetError("single_class", "dataset needs at least two classes");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw DatasetError("label_range",
                         "label " + std::to_string(labels[i]) +
                             " out of range at sample " + std::to_string(i),
                         static_cast<long>(i));
    }
  }
  if (!x.allFinite()) {
    throw DatasetError("non_finite", "attributes contain non-finite values");
  }
}

LabeledDataset load_csv(const std::filesystem::path& path,
                        const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) {
    throw DatasetError("file_not_found",
                       "cannot open dataset '" + path.string() + "'");
  }

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_labels;
  std::vector<long> label_lines;
  std::size_t width = 0;
  std::size_t label_col = 0;
  std::string line;
  long line_no = 0;
  bool skipped_header = !options.has_header;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    const std::vector<std::string> cells = split_cells(line);
    if (width == 0) {
      width = cells.size();
      if (width < 2) {
        throw DatasetError("too_few_columns",
                           "row " + std::to_string(line_no) +
                               " needs at least one attribute and a label",
                           line_no);
      }
      label_col = options.label_column.resolve(width);
      if (label_col >= width) {
        throw DatasetError("label_column",
                           "label column " + std::to_string(label_col) +
                               " outside " + std::to_string(width) +
                               " columns",
                           line_no, static_cast<long>(label_col));
      }
    } else if (cells.size() != width) {
      throw DatasetError("ragged_row",
                         "row " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(width),
                         line_no);
    }

    std::vector<double> values;
    values.reserve(width - 1);
    for (std::size_t c = 0; c < width; ++c) {
      const std::string cell = trim(cells[c]);
      if (c == label_col) {
        if (cell.empty()) {
          throw DatasetError("unparseable_cell",
                             "empty label at row " + std::to_string(line_no),
                             line_no, static_cast<long>(c));
        }
        raw_labels.push_back(cell);
        label_lines.push_back(line_no);
        continue;
      }
      double value = 0.0;
      if (!parse_number(cell, value) || !std::isfinite(value)) {
        throw DatasetError("unparseable_cell",
                           "cell '" + cell + "' at row " +
                               std::to_string(line_no) + ", column " +
                               std::to_string(c) + " is not a finite number",
                           line_no, static_cast<long>(c));
      }
      values.push_back(value);
    }
    rows.push_back(std::move(values));
  }

  if (rows.empty()) {
    throw DatasetError("empty_file",
                       "dataset '" + path.string() + "' has no rows");
  }

  LabeledDataset data;
  data.x.resize(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(width - 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }

  bool all_integer = true;
  std::vector<long long> integer_labels(raw_labels.size());
  for (std::size_t i = 0; i < raw_labels.size() && all_integer; ++i) {
    all_integer = parse_number(raw_labels[i], integer_labels[i]);
  }

  data.labels.resize(raw_labels.size());
  if (all_integer) {
    std::map<long long, int> index;
    for (long long v : integer_labels) index.emplace(v, 0);
    int next = 0;
    for (auto& [value, k] : index) {
      k = next++;
      data.class_names.push_back(std::to_string(value));
    }
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
      data.labels[i] = index.at(integer_labels[i]);
    }
  } else {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
      auto [it, inserted] =
          index.emplace(raw_labels[i], static_cast<int>(index.size()));
      if (inserted) data.class_names.push_back(raw_labels[i]);
      data.labels[i] = it->second;
    }
  }
  data.n_classes = static_cast<int>(data.class_names.size());

  if (data.n_classes < 2) {
    throw DatasetError("single_class",
                       "dataset '" + path.string() +
                           "' has a single class '" + data.class_names[0] +
                           "'",
                       label_lines.front(), static_cast<long>(label_col));
  }
  return data;
}

Eigen::VectorXd one_hot(int label, int n_classes) {
  if (n_classes < 1 || label < 0 || label >= n_classes) {
    throw InvalidInputError("one_hot: label " + std::to_string(label) +
                            " outside [0, " + std::to_string(n_classes) +
                            ")");
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_classes);
  y(label) = 1.0;
  return y;
}

SplitDataset split(const LabeledDataset& data, double train_fraction,
                   std::uint64_t seed, bool stratified) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidInputError("split: train fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;

  if (stratified) {
    std::vector<std::vector<Eigen::Index>> by_class(
        static_cast<std::size_t>(data.n_classes));
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
    }
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto& rows = by_class[c];
      if (rows.size() < 2) {
        throw DatasetError("class_too_small",
                           "stratified split: class " + std::to_string(c) +
                               " has " + std::to_string(rows.size()) +
                               " sample(s), needs at least 2");
      }
      std::shuffle(rows.begin(), rows.end(), rng);
      const auto n_test = static_cast<std::size_t>(std::floor(
          (1.0 - train_fraction) * static_cast<double>(rows.size()) + 1e-9));
      test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + n_test);
      train_rows.insert(train_rows.end(), rows.begin() + n_test, rows.end());
    }
  } else {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.n()));
    std::iota(rows.begin(), rows.end(), Eigen::Index(0));
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(data.n())));
    train_rows.assign(rows.begin(), rows.begin() + n_train);
    test_rows.assign(rows.begin() + n_train, rows.end());
  }

  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  SplitDataset out;
  out.train = data.subset(train_rows);
  out.test = data.subset(test_rows);
  out.train_rows = std::move(train_rows);
  out.test_rows = std::move(test_rows);
  return out;
}

Standardizer fit_standardizer(const LabeledDataset& data) {
  if (data.n() < 2) {
    throw InvalidInputError("fit_standardizer: needs at least two samples");
  }
  Standardizer s;
  s.means = data.x.colwise().mean();
  const Eigen::MatrixXd centered = data.x.rowwise() - s.means;
  s.scales = (centered.colwise().squaredNorm() / static_cast<double>(data.n()))
                 .cwiseSqrt();
  for (Eigen::Index j = 0; j < s.scales.size(); ++j) {
    if (s.scales(j) == 0.0) s.scales(j) = 1.0;
  }
  return s;
}

Eigen::MatrixXd apply_standardizer(const Standardizer& s,
                                   const Eigen::MatrixXd& x) {
  if (x.cols() != s.means.size()) {
    throw DimensionMismatchError("apply_standardizer attribute count",
                                 static_cast<std::size_t>(s.means.size()),
                                 static_cast<std::size_t>(x.cols()));
  }
  return (x.rowwise() - s.means).array().rowwise() / s.scales.array();
}

LabeledDataset apply_standardizer(const Standardizer& s,
                                  const LabeledDataset& data) {
  return data.with_attributes(apply_standardizer(s, data.x));
}

}  // namespace somdml
