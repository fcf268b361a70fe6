#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "somdml/dataset.hpp"
#include "somdml/lmnn.hpp"
#include "somdml/som.hpp"

namespace somdml::harness {

struct DatasetConfig {
  std::filesystem::path path;
  CsvOptions csv;
  // When set, `path` is the training file and no split is drawn.
  std::optional<std::filesystem::path> test_path;
  bool standardize = false;
  std::optional<Eigen::Index> pca_components;
};

struct SplitConfig {
  double fraction = 0.7;
  // Seed of the single shared split; defaults to the experiment base seed.
  std::optional<std::uint64_t> seed;
  bool stratified = true;
  // Draw a fresh split for every run with seed base_seed + run.
  bool resample_per_run = false;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  SplitConfig split;
  SomConfig som;
  std::optional<LmnnConfig> lmnn;  // absent: SOM arm only
  int runs = 1;
  std::uint64_t base_seed = 0;
  // Replace the learned metric by the identity (the DML arm then sees the
  // same features as the SOM arm).
  bool debug_identity_metric = false;
  bool save_model = false;

  std::uint64_t split_seed(int run) const;
  std::uint64_t som_seed(int run) const { return base_seed + 10000 + run; }
  void validate() const;
};

// INI text with sections [dataset], [split], [som], [lmnn] and [experiment].
// Relative dataset paths resolve against `base_dir`. Unknown sections or keys
// are rejected.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace somdml::harness
