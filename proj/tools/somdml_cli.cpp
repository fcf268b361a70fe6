#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "somdml/dataset.hpp"
#include "somdml/harness/config.hpp"
#include "somdml/harness/experiment.hpp"
#include "somdml/harness/report.hpp"
#include "somdml/som.hpp"

namespace {

using nlohmann::json;
using namespace somdml;
using namespace somdml::harness;

int fail(const json& record) {
  std::cerr << record.dump() << '\n';
  return 1;
}

std::vector<int> parse_k_list(const std::string& text) {
  std::vector<int> ks;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw ConfigError("--k: cannot parse '" + item + "'");
    }
    ks.push_back(k);
  }
  return ks;
}

void print_summary(const ExperimentReport& report) {
  for (const ArmSummary& arm : report.arms) {
    std::printf("%-8s train %7.3f%% (sd %.3f)  test %7.3f%% (sd %.3f)  runs %zu\n",
                arm.name.c_str(), arm.mean_train_error, arm.std_train_error,
                arm.mean_test_error, arm.std_test_error, arm.runs.size());
  }
}

json dataset_stats(const LabeledDataset& data) {
  json classes = json::array();
  const auto counts = data.class_counts();
  for (int c = 0; c < data.n_classes; ++c) {
    classes.push_back({{"index", c},
                       {"label", data.class_names[static_cast<std::size_t>(c)]},
                       {"count", counts[static_cast<std::size_t>(c)]}});
  }
  json attributes = json::array();
  for (Eigen::Index j = 0; j < data.d(); ++j) {
    const auto col = data.x.col(j);
    const double mean = col.mean();
    attributes.push_back(
        {{"column", j},
         {"min", col.minCoeff()},
         {"max", col.maxCoeff()},
         {"mean", mean},
         {"std", std::sqrt((col.array() - mean).square().mean())}});
  }
  return {{"n", data.n()},
          {"d", data.d()},
          {"n_classes", data.n_classes},
          {"classes", classes},
          {"attributes", attributes}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supervised self-organising maps with LMNN metric learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string format = "json";
  int parallel = 1;
  bool strict_epochs = false;
  bool debug_identity = false;
  bool timings = false;
  bool save_model = false;

  CLI::App* run = app.add_subcommand("run", "Run the SOM vs SOM+DML comparison");
  run->add_option("--config", config_path, "Experiment config (INI)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_path, "Report path")->required();
  run->add_option("--format", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  run->add_option("--parallel", parallel, "Worker threads")
      ->check(CLI::PositiveNumber);
  run->add_flag("--strict-epochs", strict_epochs,
                "Always train for max_epochs");
  run->add_flag("--debug-identity-metric", debug_identity,
                "Use M = I in the SOM+DML arm");
  run->add_flag("--timings", timings, "Include wall-clock timings in JSON");
  run->add_flag("--save-model", save_model,
                "Store run 0's preprocessing, transform and grids");

  std::string k_list;
  CLI::App* crossval =
      app.add_subcommand("crossval-k", "Sweep the LMNN target-neighbour count");
  crossval->add_option("--config", config_path, "Experiment config (INI)")
      ->required()
      ->check(CLI::ExistingFile);
  crossval->add_option("--k", k_list, "Comma-separated k values")->required();
  crossval->add_option("--out", out_path, "Report path")->required();
  crossval->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"json", "csv"}));
  crossval->add_option("--parallel", parallel, "Worker threads")
      ->check(CLI::PositiveNumber);

  std::string data_path;
  std::string label_column = "last";
  bool has_header = false;
  CLI::App* inspect = app.add_subcommand("inspect", "Print dataset statistics");
  auto* inspect_config =
      inspect->add_option("--config", config_path, "Use the config's dataset")
          ->check(CLI::ExistingFile);
  inspect->add_option("--data", data_path, "CSV file")
      ->check(CLI::ExistingFile)
      ->excludes(inspect_config);
  inspect->add_option("--label-column", label_column, "'last' or an index");
  inspect->add_flag("--header", has_header, "First row is a header");

  std::string report_path;
  std::string arm = kDmlArm;
  CLI::App* replay = app.add_subcommand(
      "replay", "Evaluate a saved model on a labelled CSV file");
  replay->add_option("--report", report_path, "JSON report with a model block")
      ->required()
      ->check(CLI::ExistingFile);
  replay->add_option("--data", data_path, "CSV file")
      ->required()
      ->check(CLI::ExistingFile);
  replay->add_option("--arm", arm, "som or som+dml")
      ->check(CLI::IsMember({kSomArm, kDmlArm}));
  replay->add_option("--label-column", label_column, "'last' or an index");
  replay->add_flag("--header", has_header, "First row is a header");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      ExperimentConfig config = load_config(config_path);
      if (strict_epochs) config.som.strict_epochs = true;
      if (debug_identity) config.debug_identity_metric = true;
      if (save_model) config.save_model = true;
      const ExperimentReport report = run_experiment(config, {parallel});
      emit_report(report, out_path, parse_format(format), timings);
      print_summary(report);
    } else if (*crossval) {
      const ExperimentConfig config = load_config(config_path);
      const CrossValReport report =
          run_crossval_k(config, parse_k_list(k_list), {parallel});
      if (crossval->count("--format") == 0) format = "csv";
      emit_report(report, out_path, parse_format(format));
      for (const CrossValPoint& p : report.points) {
        std::printf("k=%-3d train %7.3f%%  test %7.3f%%\n", p.k,
                    p.mean_train_error, p.mean_test_error);
      }
      std::printf("selected k=%d\n", report.selected_k);
    } else if (*inspect) {
      LabeledDataset data;
      if (!config_path.empty()) {
        const ExperimentConfig config = load_config(config_path);
        data = load_csv(config.dataset.path, config.dataset.csv);
      } else if (!data_path.empty()) {
        data = load_csv(data_path, {LabelColumn::parse(label_column), has_header});
      } else {
        throw ConfigError("inspect needs --config or --data");
      }
      std::cout << dataset_stats(data).dump(2) << '\n';
    } else if (*replay) {
      const ReplayModel saved = load_replay_model(report_path);
      const LabeledDataset raw =
          load_csv(data_path, {LabelColumn::parse(label_column), has_header});
      const LabeledDataset data = align_classes(raw, saved.class_names);
      const LabeledDataset features =
          data.with_attributes(saved.model.features(arm, data.x));
      const SomGrid& grid = saved.model.grid(arm);
      std::cout << json{{"arm", arm},
                        {"n", features.n()},
                        {"error", som_evaluate(grid, features)}}
                       .dump()
                << '\n';
    }
  } catch (const RunError& e) {
    return fail({{"error", e.kind()},
                 {"message", e.what()},
                 {"run", e.run()},
                 {"arm", e.arm()}});
  } catch (const DatasetError& e) {
    json record = {{"error", e.kind()}, {"message", e.what()}};
    if (e.row() >= 0) record["row"] = e.row();
    if (e.column() >= 0) record["column"] = e.column();
    return fail(record);
  } catch (const Error& e) {
    return fail({{"error", e.kind()}, {"message", e.what()}});
  } catch (const std::exception& e) {
    return fail({{"error", "internal"}, {"message", e.what()}});
  }
  return 0;
}
