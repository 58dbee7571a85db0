// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON/CSV report emission. Every JSON document carries schema_version; CSV
// numbers are printed with shortest-round-trip formatting so reruns are
// byte-identical.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "surveykit/autoencoder.hpp"
#include "surveykit/dataset.hpp"
#include "surveykit/entropy.hpp"
#include "surveykit/error.hpp"
#include "surveykit/kpca.hpp"
#include "surveykit/labeling.hpp"
#include "surveykit/profiling.hpp"
#include "surveykit/simulation.hpp"

namespace surveykit {

inline constexpr int kSchemaVersion = 1;

using json = nlohmann::ordered_json;

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
  out << text;
}

}  // namespace detail

inline void write_json(const std::filesystem::path& path, const json& document) {
  detail::write_text(path, document.dump(2) + "\n");
}

// --- entropy ----------------------------------------------------------------

inline json entropy_report_json(const EntropyReport& report, const OutlierLabeling& labeling) {
  json variables = json::array();
  for (std::size_t v = 0; v < report.variables.size(); ++v) {
    const auto& entry = report.variables[v];
    json categories = json::array();
    for (const auto& category : entry.categories) {
      json c{{"label", category.label}, {"freq", category.frequency}};
      if (std::isinf(category.info_nats)) {
        c["info_nats"] = nullptr;
        c["unobserved"] = true;
      } else {
        c["info_nats"] = category.info_nats;
      }
      categories.push_back(std::move(c));
    }
    variables.push_back(json{
        {"variable", entry.variable},
        {"gamma1", entry.gamma1},
        {"cluster_label",
         labeling.labels[v] == OutlierLabel::atypical ? "atypical" : "typical"},
        {"degenerate", entry.degenerate},
        {"categories", std::move(categories)},
    });
  }
  return json{{"schema_version", kSchemaVersion}, {"variables", std::move(variables)}};
}

// --- scores and labels --------------------------------------------------------

inline json row_scores_json(const std::string& detector, std::span<const double> scores) {
  const std::string field = detector == "kpca" ? "re_kpca" : "re_ae";
  json rows = json::array();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    rows.push_back(json{{"row_id", i}, {field, scores[i]}});
  }
  return json{{"schema_version", kSchemaVersion}, {"detector", detector}, {"scores", std::move(rows)}};
}

inline json variable_scores_json(const EntropyReport& report) {
  json rows = json::array();
  for (const auto& entry : report.variables) {
    rows.push_back(json{{"variable", entry.variable}, {"gamma1", entry.gamma1}});
  }
  return json{{"schema_version", kSchemaVersion}, {"detector", "entropy"}, {"scores", std::move(rows)}};
}

inline json labeling_json(const OutlierLabeling& labeling, const std::string& item_kind) {
  json labels = json::array();
  for (std::size_t i = 0; i < labeling.labels.size(); ++i) {
    labels.push_back(json{
        {item_kind, i},
        {"label", labeling.labels[i] == OutlierLabel::atypical ? "atypical" : "typical"}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"boundary", labeling.boundary},
              {"centroid_low", labeling.centroid_low},
              {"centroid_high", labeling.centroid_high},
              {"labels", std::move(labels)}};
}

// --- validation / importance ---------------------------------------------------

inline json validation_json(const ValidationReport& report, const std::string& detector) {
  return json{{"schema_version", kSchemaVersion},
              {"detector", detector},
              {"scheme", to_string(report.scheme)},
              {"mcc_mean", report.mcc_mean},
              {"ci_low", report.ci_low},
              {"ci_high", report.ci_high},
              {"iterations", report.iterations},
              {"degenerate_count", report.degenerate_count}};
}

inline json importance_json(const ImportanceReport& report, const std::string& detector) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back(json{{"variable", row.variable},
                        {"mean_importance", row.mean},
                        {"ci_low", row.ci_low},
                        {"ci_high", row.ci_high}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"detector", detector},
              {"permutations", report.permutations},
              {"variables", std::move(rows)}};
}

// Average-importance table, descending, mirroring the report layout.
inline std::string importance_csv(const ImportanceReport& report) {
  std::vector<ImportanceReport::Row> rows = report.rows;
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.mean > b.mean; });
  std::string out = "variable,average_importance,ci_low,ci_high\n";
  for (const auto& row : rows) {
    out += detail::csv_escape(row.variable) + "," + detail::format_double(row.mean) + "," +
           detail::format_double(row.ci_low) + "," + detail::format_double(row.ci_high) + "\n";
  }
  return out;
}

// --- profiling ------------------------------------------------------------------

inline json subgroups_json(const SubgroupPartition& partition) {
  json silhouettes = json::array();
  for (const auto& [k, score] : partition.silhouette_by_k) {
    silhouettes.push_back(json{{"k", k}, {"silhouette", score}});
  }
  json members = json::array();
  for (std::size_t i = 0; i < partition.outlier_rows.size(); ++i) {
    members.push_back(
        json{{"row_id", partition.outlier_rows[i]}, {"subgroup", partition.assignment[i]}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"chosen_k", partition.chosen_k},
              {"silhouette_by_k", std::move(silhouettes)},
              {"members", std::move(members)}};
}

inline json medoids_json(const MedoidProfile& profile, std::span<const VariableSpec> specs) {
  json clusters = json::array();
  for (const auto& cluster : profile.clusters) {
    json values = json::object();
    for (std::size_t v = 0; v < specs.size(); ++v) values[specs[v].name] = cluster.labels[v];
    clusters.push_back(json{{"medoid_row", cluster.medoid_row},
                            {"size", cluster.size},
                            {"values", std::move(values)}});
  }
  return json{{"schema_version", kSchemaVersion}, {"subgroups", std::move(clusters)}};
}

// Variables x subgroups table.
inline std::string medoids_csv(const MedoidProfile& profile, std::span<const VariableSpec> specs) {
  std::string out = "variable";
  for (std::size_t c = 0; c < profile.clusters.size(); ++c) {
    out += ",subgroup_" + std::to_string(c + 1);
  }
  out += "\n";
  for (std::size_t v = 0; v < specs.size(); ++v) {
    out += detail::csv_escape(specs[v].name);
    for (const auto& cluster : profile.clusters) {
      out += "," + detail::csv_escape(cluster.labels[v]);
    }
    out += "\n";
  }
  return out;
}

// --- simulation -------------------------------------------------------------------

inline json simulation_summary_json(const MonteCarloResult& result) {
  json rows = json::array();
  for (const auto& r : result.results) {
    rows.push_back(json{{"allocation", r.allocation},
                        {"estimator", r.estimator},
                        {"mse", r.mse},
                        {"relative_bias", r.relative_bias},
                        {"p5", r.p5},
                        {"p95", r.p95},
                        {"replications", r.replications},
                        {"unreliable", r.unreliable}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"true_mean", result.true_mean},
              {"replications", result.replications},
              {"stratum_sizes", result.stratum_sizes},
              {"frame_sizes", result.frame_sizes},
              {"results", std::move(rows)}};
}

inline std::string estimates_csv(const MonteCarloResult& result) {
  std::string out = "allocation,estimator,replication,estimate\n";
  for (const auto& r : result.results) {
    for (std::size_t m = 0; m < r.estimates.size(); ++m) {
      out += r.allocation + "," + r.estimator + "," + std::to_string(m) + "," +
             detail::format_double(r.estimates[m]) + "\n";
    }
  }
  return out;
}

inline std::string convergence_trace_csv(const MonteCarloResult& result) {
  std::string out = "allocation,estimator,replication,running_mean\n";
  for (const auto& r : result.results) {
    double sum = 0.0;
    for (std::size_t m = 0; m < r.estimates.size(); ++m) {
      sum += r.estimates[m];
      out += r.allocation + "," + r.estimator + "," + std::to_string(m) + "," +
             detail::format_double(sum / static_cast<double>(m + 1)) + "\n";
    }
  }
  return out;
}

inline std::string rb_distribution_csv(const MonteCarloResult& result) {
  std::string out = "allocation,estimator,replication,relative_bias\n";
  for (const auto& r : result.results) {
    for (std::size_t m = 0; m < r.estimates.size(); ++m) {
      out += r.allocation + "," + r.estimator + "," + std::to_string(m) + "," +
             detail::format_double((r.estimates[m] - result.true_mean) / result.true_mean) + "\n";
    }
  }
  return out;
}

// --- model persistence ---------------------------------------------------------

inline json kpca_spectrum_json(const KpcaModel& model) {
  json eigenvalues = json::array();
  for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) eigenvalues.push_back(model.eigenvalues[i]);
  json components = json::array();
  for (std::size_t c = 0; c < model.retained; ++c) {
    json column = json::array();
    for (Eigen::Index i = 0; i < model.components.rows(); ++i) {
      column.push_back(model.components(i, static_cast<Eigen::Index>(c)));
    }
    components.push_back(std::move(column));
  }
  return json{{"schema_version", kSchemaVersion},
              {"gamma", model.config.gamma},
              {"variance_fraction", model.config.variance_fraction},
              {"rows", model.n},
              {"variables", model.p},
              {"retained", model.retained},
              {"eigenvalues", std::move(eigenvalues)},
              {"components", std::move(components)}};
}

inline json ae_model_json(const AeModel& model) {
  const Eigen::VectorXd flat = ae_flatten(model.params);
  json parameters = json::array();
  for (Eigen::Index i = 0; i < flat.size(); ++i) parameters.push_back(flat[i]);
  return json{{"schema_version", kSchemaVersion},
              {"input_dim", model.arch.input_dim},
              {"half_dim", model.arch.half_dim},
              {"embedding_dim", model.arch.embedding_dim},
              {"category_counts", model.category_counts},
              {"parameters", std::move(parameters)}};
}

inline AeModel ae_model_from_json(const json& document) {
  AeModel model = ae_init(document.at("input_dim").get<int>(), 0);
  model.category_counts = document.at("category_counts").get<std::vector<int>>();
  const auto values = document.at("parameters").get<std::vector<double>>();
  Eigen::VectorXd flat(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) flat[static_cast<Eigen::Index>(i)] = values[i];
  ae_unflatten(flat, model.params);
  return model;
}

inline json error_json(const Error& error) {
  return json{{"schema_version", kSchemaVersion},
              {"error", to_string(error.code())},
              {"message", error.what()}};
}

}  // namespace surveykit
