#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aee/explainers.hpp"
#include "aee/latent_anomaly.hpp"
#include "aee/quality.hpp"
#include "aee/series.hpp"

namespace aee {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary file and renames, so readers never see a
/// partial artifact.
void write_text(const std::filesystem::path& path, const std::string& text);

// Datasets. CSV has a header row `id,t0,...,t{N-1}[,label]`, one series per
// row; NDJSON has one {"id", "values", "label"} object per line.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);
std::string dataset_to_ndjson(const Dataset& data);
Dataset dataset_from_ndjson(const std::string& text);
/// Picks the format from the extension (.csv or .ndjson/.jsonl).
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

// Explanations.
std::string explanations_to_csv(const std::vector<Explanation>& explanations);
std::string explanations_to_ndjson(const std::vector<Explanation>& explanations);
std::vector<Explanation> explanations_from_ndjson(const std::string& text);

// Detection.
std::string detection_to_csv(const Dataset& data, const Detection& detection);
std::string scatter_to_csv(const Dataset& data, const std::vector<ScatterPoint>& points);

// Quality measurement.
std::string qm_results_to_csv(const std::vector<QMResult>& results);
nlohmann::json qm_summary_json(const QMSummary& summary);
std::string qm_summary_to_csv(const std::vector<QMSummary>& summaries);
QMSummary qm_summary_from_json(const nlohmann::json& j);

}  // namespace aee
