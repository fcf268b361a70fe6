#include "somdml/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "somdml/lmnn.hpp"

namespace somdml::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs fn(0) .. fn(n - 1) on up to `workers` threads. After all workers stop,
// the exception of the lowest failing index is rethrown; once any index
// fails no new indices are started.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  workers = std::clamp(workers, 1, std::max(n, 1));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct Source {
  LabeledDataset full;  // empty when pre-split
  LabeledDataset train;
  LabeledDataset test;
  bool presplit = false;
};

Source load_source(const ExperimentConfig& config) {
  Source source;
  if (config.dataset.test_path) {
    source.presplit = true;
    source.train = load_csv(config.dataset.path, config.dataset.csv);
    source.test = align_classes(
        load_csv(*config.dataset.test_path, config.dataset.csv),
        source.train.class_names);
    if (source.test.d() != source.train.d()) {
      throw DimensionMismatchError("test file attribute count",
                                   static_cast<std::size_t>(source.train.d()),
                                   static_cast<std::size_t>(source.test.d()));
    }
  } else {
    source.full = load_csv(config.dataset.path, config.dataset.csv);
  }
  return source;
}

std::pair<LabeledDataset, LabeledDataset> draw_split(
    const ExperimentConfig& config, const Source& source, int run) {
  if (source.presplit) return {source.train, source.test};
  SplitDataset s = split(source.full, config.split.fraction,
                         config.split_seed(run), config.split.stratified);
  return {std::move(s.train), std::move(s.test)};
}

Eigen::MatrixXd pad_columns(Eigen::MatrixXd x, Eigen::Index width) {
  const Eigen::Index used = x.cols();
  if (used < width) {
    x.conservativeResize(Eigen::NoChange, width);
    x.rightCols(width - used).setZero();
  }
  return x;
}

struct Prepared {
  LabeledDataset train;
  LabeledDataset test;
  LabeledDataset dml_train;
  LabeledDataset dml_test;
  ModelBlock model;  // grids filled in later
  std::optional<LmnnFitSummary> lmnn;
  double prepare_seconds = 0.0;
  double lmnn_seconds = 0.0;
};

LmnnFitSummary summarize(const LmnnResult& fit, int split_index, int k,
                         Eigen::Index dropped) {
  LmnnFitSummary s;
  s.split = split_index;
  s.k = k;
  s.iterations = fit.iterations;
  s.stop_reason = fit.stop_reason;
  s.converged = fit.converged;
  s.active_triplets = fit.active_triplets;
  s.dropped_dims = dropped;
  s.loss_trace = fit.loss_trace;
  s.min_eigenvalues = fit.min_eigenvalues;
  return s;
}

Prepared prepare(const ExperimentConfig& config, const Source& source,
                 int run) {
  const auto start = Clock::now();
  Prepared p;
  std::tie(p.train, p.test) = draw_split(config, source, run);

  if (config.dataset.standardize) {
    p.model.standardizer = fit_standardizer(p.train);
    p.train = apply_standardizer(*p.model.standardizer, p.train);
    p.test = apply_standardizer(*p.model.standardizer, p.test);
  }
  if (config.dataset.pca_components) {
    p.model.pca = pca_fit(p.train.x, *config.dataset.pca_components);
    p.train = p.train.with_attributes(pca_transform(*p.model.pca, p.train.x));
    p.test = p.test.with_attributes(pca_transform(*p.model.pca, p.test.x));
  }
  p.model.feature_dim = p.train.d();
  p.prepare_seconds = seconds_since(start);

  if (config.lmnn) {
    const auto lmnn_start = Clock::now();
    if (config.debug_identity_metric) {
      p.model.transform = LinearTransformd::Identity(p.train.d());
    } else {
      const LmnnResult fit = lmnn_fit(p.train, *config.lmnn);
      p.model.transform = whiten_decompose(fit.metric);
      p.lmnn = summarize(fit, run, config.lmnn->k,
                         p.model.transform->dropped_dims);
    }
    p.lmnn_seconds = seconds_since(lmnn_start);
    p.dml_train = p.train.with_attributes(
        pad_columns(whiten_apply(*p.model.transform, p.train.x),
                    p.model.feature_dim));
    p.dml_test = p.test.with_attributes(
        pad_columns(whiten_apply(*p.model.transform, p.test.x),
                    p.model.feature_dim));
  }
  return p;
}

struct RunOutcome {
  std::optional<ArmRun> som;
  std::optional<ArmRun> dml;
  std::optional<SomGrid> som_grid;
  std::optional<SomGrid> dml_grid;
  std::optional<Prepared> prepared;  // only when splits are drawn per run
  double som_seconds = 0.0;
  double dml_seconds = 0.0;
};

ArmRun train_arm(const SomGrid& init, const LabeledDataset& train,
                 const LabeledDataset& test, const SomConfig& som, int run,
                 SomGrid* keep) {
  ArmRun out;
  out.run = run;
  out.init_hash = grid_hash(init);
  SomTrainResult result = som_train(init, train, som);
  out.train_error = som_evaluate(result.grid, train);
  out.test_error = som_evaluate(result.grid, test);
  out.epochs = result.trace.epochs_run;
  out.stopped_by = result.trace.stopped_by;
  if (keep) *keep = std::move(result.grid);
  return out;
}

void summarize_arm(ArmSummary& arm) {
  const auto n = static_cast<double>(arm.runs.size());
  double train = 0.0;
  double test = 0.0;
  for (const ArmRun& r : arm.runs) {
    train += r.train_error;
    test += r.test_error;
  }
  arm.mean_train_error = train / n;
  arm.mean_test_error = test / n;
  double vtrain = 0.0;
  double vtest = 0.0;
  for (const ArmRun& r : arm.runs) {
    vtrain += (r.train_error - arm.mean_train_error) *
              (r.train_error - arm.mean_train_error);
    vtest += (r.test_error - arm.mean_test_error) *
             (r.test_error - arm.mean_test_error);
  }
  if (arm.runs.size() > 1) {
    arm.std_train_error = std::sqrt(vtrain / (n - 1.0));
    arm.std_test_error = std::sqrt(vtest / (n - 1.0));
  }
}

ExperimentReport run_with_source(const ExperimentConfig& config,
                                 const Source& source,
                                 const RunOptions& options, bool dml_only) {
  config.validate();
  const int runs = config.runs;
  const bool per_run = config.split.resample_per_run && !source.presplit;
  const bool with_som = !(dml_only && config.lmnn);

  std::optional<Prepared> shared;
  if (!per_run) {
    try {
      shared = prepare(config, source, 0);
    } catch (const Error& e) {
      throw RunError(e, 0, "prepare");
    }
  }

  std::vector<RunOutcome> outcomes(static_cast<std::size_t>(runs));
  parallel_for(runs, options.parallel, [&](int r) {
    RunOutcome& out = outcomes[static_cast<std::size_t>(r)];
    if (per_run) {
      try {
        out.prepared = prepare(config, source, r);
      } catch (const Error& e) {
        throw RunError(e, r, "prepare");
      }
    }
    const Prepared& p = per_run ? *out.prepared : *shared;
    SomConfig som = config.som;
    som.seed = config.som_seed(r);
    const bool keep = config.save_model && r == 0;
    const SomGrid init = som_init(som, p.model.feature_dim, p.train.n_classes);

    if (with_som) {
      const auto start = Clock::now();
      try {
        if (keep) out.som_grid.emplace();
        out.som = train_arm(init, p.train, p.test, som, r,
                            keep ? &*out.som_grid : nullptr);
      } catch (const Error& e) {
        throw RunError(e, r, kSomArm);
      }
      out.som_seconds = seconds_since(start);
    }
    if (config.lmnn) {
      const auto start = Clock::now();
      try {
        if (keep) out.dml_grid.emplace();
        out.dml = train_arm(init, p.dml_train, p.dml_test, som, r,
                            keep ? &*out.dml_grid : nullptr);
      } catch (const Error& e) {
        throw RunError(e, r, kDmlArm);
      }
      out.dml_seconds = seconds_since(start);
    }
  });

  ExperimentReport report;
  report.config = config;
  const Prepared& first = per_run ? *outcomes.front().prepared : *shared;
  report.class_names = first.train.class_names;
  report.n_train = first.train.n();
  report.n_test = first.test.n();
  report.input_dim =
      source.presplit ? source.train.d() : source.full.d();
  report.feature_dim = first.model.feature_dim;

  if (with_som) report.arms.push_back({kSomArm, {}});
  if (config.lmnn) report.arms.push_back({kDmlArm, {}});
  for (int r = 0; r < runs; ++r) {
    RunOutcome& out = outcomes[static_cast<std::size_t>(r)];
    std::size_t a = 0;
    if (with_som) report.arms[a++].runs.push_back(*out.som);
    if (config.lmnn) report.arms[a].runs.push_back(*out.dml);
    report.timings.som_seconds += out.som_seconds;
    report.timings.dml_seconds += out.dml_seconds;
    if (per_run) {
      if (out.prepared->lmnn) report.lmnn.push_back(*out.prepared->lmnn);
      report.timings.prepare_seconds += out.prepared->prepare_seconds;
      report.timings.lmnn_seconds += out.prepared->lmnn_seconds;
    }
  }
  if (!per_run) {
    if (shared->lmnn) report.lmnn.push_back(*shared->lmnn);
    report.timings.prepare_seconds = shared->prepare_seconds;
    report.timings.lmnn_seconds = shared->lmnn_seconds;
  }
  for (ArmSummary& arm : report.arms) summarize_arm(arm);

  if (config.save_model) {
    ModelBlock model = first.model;
    RunOutcome& out = outcomes.front();
    if (out.som_grid) model.grids.emplace_back(kSomArm, *out.som_grid);
    if (out.dml_grid) model.grids.emplace_back(kDmlArm, *out.dml_grid);
    report.model = std::move(model);
  }
  return report;
}

}  // namespace

double LmnnFitSummary::min_eigenvalue() const {
  return min_eigenvalues.empty()
             ? 0.0
             : *std::min_element(min_eigenvalues.begin(),
                                 min_eigenvalues.end());
}

bool LmnnFitSummary::loss_non_increasing() const {
  return std::adjacent_find(loss_trace.begin(), loss_trace.end(),
                            [](double a, double b) { return b > a; }) ==
         loss_trace.end();
}

const SomGrid& ModelBlock::grid(const std::string& arm) const {
  for (const auto& [name, g] : grids) {
    if (name == arm) return g;
  }
  throw InvalidInputError("model has no grid for arm '" + arm + "'");
}

Eigen::MatrixXd ModelBlock::features(const std::string& arm,
                                     const Eigen::MatrixXd& raw) const {
  Eigen::MatrixXd x = raw;
  if (standardizer) x = apply_standardizer(*standardizer, x);
  if (pca) x = pca_transform(*pca, x);
  if (arm == kDmlArm) {
    if (!transform) throw InvalidInputError("model has no metric transform");
    x = pad_columns(whiten_apply(*transform, x), feature_dim);
  } else if (arm != kSomArm) {
    throw InvalidInputError("unknown arm '" + arm + "'");
  }
  return x;
}

const ArmSummary& ExperimentReport::arm(const std::string& name) const {
  for (const ArmSummary& a : arms) {
    if (a.name == name) return a;
  }
  throw InvalidInputError("report has no arm '" + name + "'");
}

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const RunOptions& options) {
  config.validate();
  return run_with_source(config, load_source(config), options, false);
}

int select_k(const std::vector<CrossValPoint>& points) {
  if (points.empty()) throw InvalidInputError("select_k: no points");
  const CrossValPoint* best = &points.front();
  for (const CrossValPoint& p : points) {
    if (p.mean_test_error < best->mean_test_error ||
        (p.mean_test_error == best->mean_test_error && p.k < best->k)) {
      best = &p;
    }
  }
  return best->k;
}

CrossValReport run_crossval_k(const ExperimentConfig& config,
                              const std::vector<int>& k_values,
                              const RunOptions& options) {
  config.validate();
  if (!config.lmnn) throw ConfigError("crossval-k needs an [lmnn] section");
  if (k_values.empty()) throw ConfigError("crossval-k: no k values given");
  if (std::set<int>(k_values.begin(), k_values.end()).size() !=
      k_values.size()) {
    throw ConfigError("crossval-k: duplicate k values");
  }
  for (int k : k_values) {
    if (k < 1) throw ConfigError("crossval-k: k must be >= 1");
  }
  constexpr int reps = CrossValReport::kRepetitions;

  const Source source = load_source(config);
  std::vector<ExperimentConfig> rep_configs;
  Eigen::Index smallest = std::numeric_limits<Eigen::Index>::max();
  for (int j = 0; j < reps; ++j) {
    ExperimentConfig c = config;
    c.runs = 1;
    c.base_seed = config.base_seed + static_cast<std::uint64_t>(j);
    c.split.resample_per_run = true;
    c.save_model = false;
    const auto counts = draw_split(c, source, 0).first.class_counts();
    smallest = std::min(smallest, *std::min_element(counts.begin(),
                                                    counts.end()));
    rep_configs.push_back(std::move(c));
  }
  const int max_k = *std::max_element(k_values.begin(), k_values.end());
  if (max_k + 1 > smallest) {
    throw DatasetError("class_too_small",
                       "k=" + std::to_string(max_k) +
                           " is infeasible: the smallest training class has " +
                           std::to_string(smallest) + " sample(s)");
  }

  const int n_tasks = static_cast<int>(k_values.size()) * reps;
  std::vector<ArmRun> results(static_cast<std::size_t>(n_tasks));
  parallel_for(n_tasks, options.parallel, [&](int t) {
    ExperimentConfig c = rep_configs[static_cast<std::size_t>(t % reps)];
    c.lmnn->k = k_values[static_cast<std::size_t>(t / reps)];
    const ExperimentReport r = run_with_source(c, source, {}, true);
    results[static_cast<std::size_t>(t)] = r.arm(kDmlArm).runs.front();
  });

  CrossValReport report;
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    CrossValPoint p;
    p.k = k_values[i];
    for (int j = 0; j < reps; ++j) {
      const ArmRun& r = results[i * reps + static_cast<std::size_t>(j)];
      p.train_errors.push_back(r.train_error);
      p.test_errors.push_back(r.test_error);
    }
    p.mean_train_error =
        std::accumulate(p.train_errors.begin(), p.train_errors.end(), 0.0) /
        reps;
    p.mean_test_error =
        std::accumulate(p.test_errors.begin(), p.test_errors.end(), 0.0) /
        reps;
    report.points.push_back(std::move(p));
  }
  report.selected_k = select_k(report.points);
  return report;
}

LabeledDataset align_classes(const LabeledDataset& data,
                             const std::vector<std::string>& class_names) {
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    index[class_names[c]] = static_cast<int>(c);
  }
  LabeledDataset out = data;
  out.n_classes = static_cast<int>(class_names.size());
  out.class_names = class_names;
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    const std::string& name =
        data.class_names[static_cast<std::size_t>(data.labels[i])];
    const auto it = index.find(name);
    if (it == index.end()) {
      throw DatasetError("unknown_class",
                         "sample " + std::to_string(i) + " has class '" +
                             name + "', which is not a training class");
    }
    out.labels[i] = it->second;
  }
  return out;
}

}  // namespace somdml::harness
