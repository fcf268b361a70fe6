#include "somdml/harness/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace somdml::harness {

using nlohmann::json;

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <typename Derived>
json row_vector(const Eigen::DenseBase<Derived>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

template <typename Derived>
json matrix_rows(const Eigen::DenseBase<Derived>& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(row_vector(m.row(i)));
  return out;
}

Eigen::RowVectorXd read_vector(const json& j) {
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd read_matrix(const json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw Error("report", "ragged matrix in model block");
    }
    m.row(static_cast<Eigen::Index>(i)) = read_vector(j[i]);
  }
  return m;
}

json config_json(const ExperimentConfig& c) {
  json dataset = {
      {"path", c.dataset.path.string()},
      {"label_column", c.dataset.csv.label_column.to_string()},
      {"has_header", c.dataset.csv.has_header},
      {"test_path",
       c.dataset.test_path ? json(c.dataset.test_path->string()) : json()},
      {"standardize", c.dataset.standardize},
      {"pca_components", c.dataset.pca_components
                             ? json(*c.dataset.pca_components)
                             : json()},
  };
  json split = {
      {"fraction", c.split.fraction},
      {"seed", c.split.seed ? json(*c.split.seed) : json()},
      {"stratified", c.split.stratified},
      {"resample_per_run", c.split.resample_per_run},
  };
  json som = {
      {"rows", c.som.rows},           {"cols", c.som.cols},
      {"mu0", c.som.mu0},             {"lambda", c.som.lambda},
      {"alpha", c.som.alpha},         {"max_epochs", c.som.max_epochs},
      {"patience", c.som.patience},   {"init_std", c.som.init_std},
      {"strict_epochs", c.som.strict_epochs},
  };
  json lmnn;
  if (c.lmnn) {
    lmnn = {
        {"k", c.lmnn->k},
        {"c", c.lmnn->c},
        {"step_size", c.lmnn->step_size},
        {"max_iters", c.lmnn->max_iters},
        {"tol", c.lmnn->tol},
        {"max_retries", c.lmnn->max_retries},
        {"patience", c.lmnn->patience},
    };
  }
  return {
      {"dataset", dataset},
      {"split", split},
      {"som", som},
      {"lmnn", lmnn},
      {"experiment",
       {{"runs", c.runs},
        {"base_seed", c.base_seed},
        {"debug_identity_metric", c.debug_identity_metric},
        {"save_model", c.save_model}}},
  };
}

json grid_json(const SomGrid& g) {
  return {
      {"rows", g.rows},
      {"cols", g.cols},
      {"d", g.d()},
      {"n_classes", g.n_classes()},
      {"attributes", row_vector(g.attributes.reshaped<Eigen::RowMajor>())},
      {"classes", row_vector(g.classes.reshaped<Eigen::RowMajor>())},
  };
}

SomGrid grid_from_json(const json& j) {
  SomGrid g;
  g.rows = j.at("rows").get<Eigen::Index>();
  g.cols = j.at("cols").get<Eigen::Index>();
  const auto d = j.at("d").get<Eigen::Index>();
  const auto n_classes = j.at("n_classes").get<Eigen::Index>();
  const Eigen::RowVectorXd a = read_vector(j.at("attributes"));
  const Eigen::RowVectorXd c = read_vector(j.at("classes"));
  if (a.size() != g.rows * g.cols * d || c.size() != g.rows * g.cols * n_classes) {
    throw Error("report", "grid weight arrays do not match its dimensions");
  }
  g.attributes = a.reshaped<Eigen::RowMajor>(g.rows * g.cols, d);
  g.classes = c.reshaped<Eigen::RowMajor>(g.rows * g.cols, n_classes);
  return g;
}

json model_json(const ModelBlock& m) {
  json out;
  out["feature_dim"] = m.feature_dim;
  out["standardizer"] =
      m.standardizer ? json{{"means", row_vector(m.standardizer->means)},
                            {"scales", row_vector(m.standardizer->scales)}}
                     : json();
  out["pca"] = m.pca ? json{{"mean", row_vector(m.pca->mean)},
                            {"components", matrix_rows(m.pca->components)}}
                     : json();
  out["transform"] = m.transform
                         ? json{{"l", matrix_rows(m.transform->l)},
                                {"dropped_dims", m.transform->dropped_dims}}
                         : json();
  json grids = json::object();
  for (const auto& [name, g] : m.grids) grids[name] = grid_json(g);
  out["grids"] = grids;
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw Error("io", "failed writing " + path.string());
}

}  // namespace

ReportFormat parse_format(const std::string& text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "csv") return ReportFormat::Csv;
  throw ConfigError("unknown report format '" + text + "'");
}

json to_json(const ExperimentReport& report, bool include_timings) {
  json out;
  out["config"] = config_json(report.config);
  out["classes"] = report.class_names;
  out["n_train"] = report.n_train;
  out["n_test"] = report.n_test;
  out["input_dim"] = report.input_dim;
  out["feature_dim"] = report.feature_dim;

  json arms = json::array();
  for (const ArmSummary& arm : report.arms) {
    json runs = json::array();
    for (const ArmRun& r : arm.runs) {
      runs.push_back({{"run", r.run},
                      {"train_error", r.train_error},
                      {"test_error", r.test_error},
                      {"epochs", r.epochs},
                      {"stopped_by", to_string(r.stopped_by)},
                      {"init_hash", hex(r.init_hash)}});
    }
    arms.push_back({{"name", arm.name},
                    {"mean_train_error", arm.mean_train_error},
                    {"mean_test_error", arm.mean_test_error},
                    {"std_train_error", arm.std_train_error},
                    {"std_test_error", arm.std_test_error},
                    {"runs", runs}});
  }
  out["arms"] = arms;

  json lmnn = json::array();
  for (const LmnnFitSummary& s : report.lmnn) {
    lmnn.push_back({{"split", s.split},
                    {"k", s.k},
                    {"iterations", s.iterations},
                    {"stop_reason", s.stop_reason},
                    {"converged", s.converged},
                    {"initial_loss", s.loss_trace.front()},
                    {"final_loss", s.loss_trace.back()},
                    {"accepted_steps", s.loss_trace.size() - 1},
                    {"loss_non_increasing", s.loss_non_increasing()},
                    {"min_eigenvalue", s.min_eigenvalue()},
                    {"active_triplets", s.active_triplets},
                    {"dropped_dims", s.dropped_dims}});
  }
  out["lmnn"] = lmnn;
  if (report.model) out["model"] = model_json(*report.model);
  if (include_timings) {
    out["timings"] = {{"prepare_seconds", report.timings.prepare_seconds},
                      {"lmnn_seconds", report.timings.lmnn_seconds},
                      {"som_seconds", report.timings.som_seconds},
                      {"dml_seconds", report.timings.dml_seconds}};
  }
  return out;
}

json to_json(const CrossValReport& report) {
  json points = json::array();
  for (const CrossValPoint& p : report.points) {
    points.push_back({{"k", p.k},
                      {"mean_train_error", p.mean_train_error},
                      {"mean_test_error", p.mean_test_error},
                      {"train_errors", p.train_errors},
                      {"test_errors", p.test_errors}});
  }
  return {{"repetitions", CrossValReport::kRepetitions},
          {"selected_k", report.selected_k},
          {"points", points}};
}

std::string to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "run,arm,train_error,test_error\n";
  for (const ArmSummary& arm : report.arms) {
    for (const ArmRun& r : arm.runs) {
      out << r.run << ',' << arm.name << ',' << format_number(r.train_error)
          << ',' << format_number(r.test_error) << '\n';
    }
  }
  for (const ArmSummary& arm : report.arms) {
    out << "mean," << arm.name << ',' << format_number(arm.mean_train_error)
        << ',' << format_number(arm.mean_test_error) << '\n';
  }
  return out.str();
}

std::string to_csv(const CrossValReport& report) {
  std::ostringstream out;
  out << "k,mean_train_error,mean_test_error\n";
  for (const CrossValPoint& p : report.points) {
    out << p.k << ',' << format_number(p.mean_train_error) << ','
        << format_number(p.mean_test_error) << '\n';
  }
  return out.str();
}

void emit_report(const ExperimentReport& report,
                 const std::filesystem::path& path, ReportFormat format,
                 bool include_timings) {
  write_file(path, format == ReportFormat::Json
                       ? to_json(report, include_timings).dump(2) + "\n"
                       : to_csv(report));
}

void emit_report(const CrossValReport& report,
                 const std::filesystem::path& path, ReportFormat format) {
  write_file(path, format == ReportFormat::Json ? to_json(report).dump(2) + "\n"
                                                : to_csv(report));
}

ReplayModel replay_model_from_json(const json& report) {
  if (!report.contains("model")) {
    throw Error("report", "report has no model block (enable save_model)");
  }
  try {
    const json& m = report.at("model");
    ReplayModel out;
    out.class_names = report.at("classes").get<std::vector<std::string>>();
    out.model.feature_dim = m.at("feature_dim").get<Eigen::Index>();
    if (!m.at("standardizer").is_null()) {
      Standardizer s;
      s.means = read_vector(m["standardizer"].at("means"));
      s.scales = read_vector(m["standardizer"].at("scales"));
      out.model.standardizer = s;
    }
    if (!m.at("pca").is_null()) {
      PcaModeld pca;
      pca.mean = read_vector(m["pca"].at("mean"));
      pca.components = read_matrix(m["pca"].at("components"), pca.mean.size());
      out.model.pca = pca;
    }
    if (!m.at("transform").is_null()) {
      const json& t = m["transform"];
      const json& rows = t.at("l");
      LinearTransformd l;
      l.l = read_matrix(rows, rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
      l.dropped_dims = t.at("dropped_dims").get<Eigen::Index>();
      out.model.transform = l;
    }
    for (const auto& [name, g] : m.at("grids").items()) {
      out.model.grids.emplace_back(name, grid_from_json(g));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error("report", std::string("malformed model block: ") + e.what());
  }
}

ReplayModel load_replay_model(const std::filesystem::path& report_path) {
  std::ifstream in(report_path);
  if (!in) throw Error("io", "cannot open " + report_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("report", report_path.string() + ": " + e.what());
  }
  return replay_model_from_json(j);
}

}  // namespace somdml::harness
