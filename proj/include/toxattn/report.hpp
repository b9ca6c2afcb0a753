#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toxattn/metrics.hpp"

namespace toxattn {

/// Shortest decimal form that parses back to the same double
/// (std::to_chars), so CSV/JSON round-trips are exact.
std::string format_double(double v);
double parse_double(const std::string& s);

/// One sweep result: the lambda that produced the report.
struct LambdaReport {
  double lambda = 0.0;
  EvalReport report;
};

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// CSV tables, one row per lambda. Columns mirror the report families:
/// performance (accuracy, f1_score, auroc), bias means (subgroup_auc,
/// bpsn, bnsp), explainability (iou_f1, token_f1, auprc,
/// comprehensiveness, sufficiency). Absent values are empty cells.
std::string performance_csv(std::span<const LambdaReport> rows);
std::string bias_csv(std::span<const LambdaReport> rows);
std::string explainability_csv(std::span<const LambdaReport> rows);
std::string bias_by_community_csv(std::span<const LambdaReport> rows);

/// Inverse parsers; each fills only the fields its table encodes.
std::vector<LambdaReport> parse_performance_csv(const std::string& text);
std::vector<LambdaReport> parse_bias_csv(const std::string& text);
std::vector<LambdaReport> parse_explainability_csv(const std::string& text);
std::vector<LambdaReport> parse_bias_by_community_csv(const std::string& text);

/// Writes content to path via a temp file + rename, so readers never
/// observe a half-written file.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace toxattn
