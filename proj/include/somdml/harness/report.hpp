#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "somdml/harness/experiment.hpp"

namespace somdml::harness {

enum class ReportFormat { Json, Csv };
ReportFormat parse_format(const std::string& text);

// Timings are left out unless asked for, so that reruns are byte-identical.
nlohmann::json to_json(const ExperimentReport& report,
                       bool include_timings = false);
nlohmann::json to_json(const CrossValReport& report);

// CSV: run,arm,train_error,test_error with one row per run and arm, then one
// "mean" row per arm.
std::string to_csv(const ExperimentReport& report);
// CSV: k,mean_train_error,mean_test_error
std::string to_csv(const CrossValReport& report);

void emit_report(const ExperimentReport& report,
                 const std::filesystem::path& path, ReportFormat format,
                 bool include_timings = false);
void emit_report(const CrossValReport& report,
                 const std::filesystem::path& path, ReportFormat format);

struct ReplayModel {
  std::vector<std::string> class_names;
  ModelBlock model;
};

// Reads the model block of a JSON report written with save_model enabled.
ReplayModel load_replay_model(const std::filesystem::path& report_path);
ReplayModel replay_model_from_json(const nlohmann::json& report);

}  // namespace somdml::harness
