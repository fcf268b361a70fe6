#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "somdml/dataset.hpp"
#include "somdml/harness/config.hpp"
#include "somdml/pca.hpp"
#include "somdml/som.hpp"
#include "somdml/whitening.hpp"

namespace somdml::harness {

inline constexpr const char* kSomArm = "som";
inline constexpr const char* kDmlArm = "som+dml";

// A module error re-raised with the run and arm it came from. The arm is
// "prepare" for failures in loading, splitting or preprocessing.
class RunError : public Error {
 public:
  RunError(const Error& cause, int run, std::string arm)
      : Error(cause.kind(), "run " + std::to_string(run) + ", arm " + arm +
                                ": " + cause.what()),
        run_(run),
        arm_(std::move(arm)) {}

  int run() const noexcept { return run_; }
  const std::string& arm() const noexcept { return arm_; }

 private:
  int run_;
  std::string arm_;
};

struct ArmRun {
  int run = 0;
  double train_error = 0.0;
  double test_error = 0.0;
  int epochs = 0;
  StopReason stopped_by = StopReason::EpochCap;
  std::uint64_t init_hash = 0;
};

struct ArmSummary {
  std::string name;
  std::vector<ArmRun> runs;
  double mean_train_error = 0.0;
  double mean_test_error = 0.0;
  // Sample standard deviations; zero for a single run.
  double std_train_error = 0.0;
  double std_test_error = 0.0;
};

struct LmnnFitSummary {
  int split = 0;
  int k = 0;
  int iterations = 0;
  std::string stop_reason;
  bool converged = false;
  std::size_t active_triplets = 0;
  Eigen::Index dropped_dims = 0;
  std::vector<double> loss_trace;
  std::vector<double> min_eigenvalues;

  double min_eigenvalue() const;
  bool loss_non_increasing() const;
};

// Everything needed to classify new data the way run 0 did.
struct ModelBlock {
  std::optional<Standardizer> standardizer;
  std::optional<PcaModeld> pca;
  std::optional<LinearTransformd> transform;
  Eigen::Index feature_dim = 0;  // SOM attribute width of both arms
  std::vector<std::pair<std::string, SomGrid>> grids;

  const SomGrid& grid(const std::string& arm) const;
  // Preprocesses raw attributes for the given arm.
  Eigen::MatrixXd features(const std::string& arm,
                           const Eigen::MatrixXd& raw) const;
};

struct Timings {
  double prepare_seconds = 0.0;
  double lmnn_seconds = 0.0;
  double som_seconds = 0.0;
  double dml_seconds = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<std::string> class_names;
  Eigen::Index n_train = 0;
  Eigen::Index n_test = 0;
  Eigen::Index input_dim = 0;
  Eigen::Index feature_dim = 0;
  std::vector<ArmSummary> arms;
  std::vector<LmnnFitSummary> lmnn;
  std::optional<ModelBlock> model;
  Timings timings;

  const ArmSummary& arm(const std::string& name) const;
};

struct RunOptions {
  int parallel = 1;
};

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const RunOptions& options = {});

struct CrossValPoint {
  int k = 0;
  std::vector<double> train_errors;
  std::vector<double> test_errors;
  double mean_train_error = 0.0;
  double mean_test_error = 0.0;
};

struct CrossValReport {
  static constexpr int kRepetitions = 10;
  std::vector<CrossValPoint> points;
  int selected_k = 0;
};

// Argmin of mean test error; ties go to the smaller k.
int select_k(const std::vector<CrossValPoint>& points);

// Ten single-run experiments per k, repetition j using base seed
// base_seed + j and its own split. Every k is checked against the smallest
// training class before anything is fitted.
CrossValReport run_crossval_k(const ExperimentConfig& config,
                              const std::vector<int>& k_values,
                              const RunOptions& options = {});

// Maps `data` onto an existing class list by label text.
LabeledDataset align_classes(const LabeledDataset& data,
                             const std::vector<std::string>& class_names);

}  // namespace somdml::harness
