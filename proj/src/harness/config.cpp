#include "somdml/harness/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "somdml/error.hpp"

namespace somdml::harness {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"dataset",
       {"path", "label_column", "has_header", "test_path", "standardize",
        "pca_components"}},
      {"split", {"fraction", "seed", "stratified", "resample_per_run"}},
      {"som",
       {"rows", "cols", "mu0", "lambda", "alpha", "max_epochs", "patience",
        "init_std", "strict_epochs"}},
      {"lmnn",
       {"enabled", "k", "c", "step_size", "max_iters", "tol", "max_retries",
        "patience"}},
      {"experiment",
       {"runs", "base_seed", "debug_identity_metric", "save_model"}},
  };
  return keys;
}

template <typename T>
void read(const pt::ptree& section, const std::string& name,
          const std::string& key, T& out) {
  const auto value = section.get_optional<std::string>(key);
  if (!value) return;
  std::istringstream in(*value);
  T parsed{};
  if constexpr (std::is_same_v<T, bool>) {
    std::string word;
    in >> word;
    if (word == "true" || word == "1" || word == "yes") {
      parsed = true;
    } else if (word == "false" || word == "0" || word == "no") {
      parsed = false;
    } else {
      in.setstate(std::ios::failbit);
    }
  } else {
    in >> parsed;
  }
  if (in.fail() || !(in >> std::ws).eof()) {
    throw ConfigError(name + "." + key + ": cannot parse '" + *value + "'");
  }
  out = parsed;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

std::uint64_t ExperimentConfig::split_seed(int run) const {
  if (split.resample_per_run) return base_seed + static_cast<std::uint64_t>(run);
  return split.seed.value_or(base_seed);
}

void ExperimentConfig::validate() const {
  if (dataset.path.empty()) throw ConfigError("dataset.path is required");
  if (runs < 1) throw ConfigError("experiment.runs must be >= 1");
  if (dataset.pca_components && *dataset.pca_components < 1) {
    throw ConfigError("dataset.pca_components must be >= 1");
  }
  if (!dataset.test_path &&
      !(split.fraction > 0.0 && split.fraction < 1.0)) {
    throw ConfigError("split.fraction must lie in (0, 1)");
  }
  som.validate();
  if (lmnn) lmnn->validate();
}

ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " +
                      e.message());
  }

  for (const auto& [section, values] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      throw ConfigError("unknown section [" + section + "]");
    }
    if (values.empty() && !values.data().empty()) {
      throw ConfigError("key '" + section + "' outside any section");
    }
    for (const auto& [key, unused] : values) {
      if (!it->second.count(key)) {
        throw ConfigError("unknown key " + section + "." + key);
      }
    }
  }

  ExperimentConfig config;
  const pt::ptree empty;
  auto section = [&](const std::string& name) -> const pt::ptree& {
    const auto child = tree.get_child_optional(name);
    return child ? *child : empty;
  };

  const pt::ptree& dataset = section("dataset");
  if (const auto path = dataset.get_optional<std::string>("path")) {
    config.dataset.path = resolve(base_dir, *path);
  }
  if (const auto path = dataset.get_optional<std::string>("test_path");
      path && !path->empty()) {
    config.dataset.test_path = resolve(base_dir, *path);
  }
  if (const auto column = dataset.get_optional<std::string>("label_column")) {
    try {
      config.dataset.csv.label_column = LabelColumn::parse(*column);
    } catch (const Error& e) {
      throw ConfigError("dataset.label_column: " + std::string(e.what()));
    }
  }
  read(dataset, "dataset", "has_header", config.dataset.csv.has_header);
  read(dataset, "dataset", "standardize", config.dataset.standardize);
  Eigen::Index components = 0;
  read(dataset, "dataset", "pca_components", components);
  if (dataset.count("pca_components")) {
    config.dataset.pca_components = components;
  }

  const pt::ptree& split = section("split");
  read(split, "split", "fraction", config.split.fraction);
  if (split.count("seed")) {
    std::uint64_t seed = 0;
    read(split, "split", "seed", seed);
    config.split.seed = seed;
  }
  read(split, "split", "stratified", config.split.stratified);
  read(split, "split", "resample_per_run", config.split.resample_per_run);

  const pt::ptree& som = section("som");
  read(som, "som", "rows", config.som.rows);
  read(som, "som", "cols", config.som.cols);
  read(som, "som", "mu0", config.som.mu0);
  read(som, "som", "lambda", config.som.lambda);
  read(som, "som", "alpha", config.som.alpha);
  read(som, "som", "max_epochs", config.som.max_epochs);
  read(som, "som", "patience", config.som.patience);
  read(som, "som", "init_std", config.som.init_std);
  read(som, "som", "strict_epochs", config.som.strict_epochs);

  if (tree.count("lmnn")) {
    const pt::ptree& lmnn = section("lmnn");
    bool enabled = true;
    read(lmnn, "lmnn", "enabled", enabled);
    if (enabled) {
      LmnnConfig c;
      read(lmnn, "lmnn", "k", c.k);
      read(lmnn, "lmnn", "c", c.c);
      read(lmnn, "lmnn", "step_size", c.step_size);
      read(lmnn, "lmnn", "max_iters", c.max_iters);
      read(lmnn, "lmnn", "tol", c.tol);
      read(lmnn, "lmnn", "max_retries", c.max_retries);
      read(lmnn, "lmnn", "patience", c.patience);
      config.lmnn = c;
    }
  }

  const pt::ptree& experiment = section("experiment");
  read(experiment, "experiment", "runs", config.runs);
  read(experiment, "experiment", "base_seed", config.base_seed);
  read(experiment, "experiment", "debug_identity_metric",
       config.debug_identity_metric);
  read(experiment, "experiment", "save_model", config.save_model);

  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

}  // namespace somdml::harness
