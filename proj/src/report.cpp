#include "toxattn/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace toxattn {

namespace {
using nlohmann::json;
}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) {
    throw std::runtime_error("format_double failed");
  }
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("parse_double: bad number '" + s + "'");
  }
  return v;
}

namespace {

json opt_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> opt_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

json report_to_json(const EvalReport& r) {
  json bias_communities = json::object();
  for (const auto& [community, cb] : r.bias.per_community) {
    bias_communities[community] = {{"subgroup_auc", opt_to_json(cb.subgroup_auc)},
                                   {"bpsn_auc", opt_to_json(cb.bpsn_auc)},
                                   {"bnsp_auc", opt_to_json(cb.bnsp_auc)}};
  }
  return json{
      {"n_posts", r.n_posts},
      {"performance",
       {{"accuracy", r.performance.accuracy},
        {"macro_f1", r.performance.macro_f1},
        {"auroc", opt_to_json(r.performance.auroc)}}},
      {"bias",
       {{"per_community", bias_communities},
        {"aggregation", "plain mean over communities with defined values"},
        {"subgroup_auc_mean", opt_to_json(r.bias.subgroup_auc_mean)},
        {"bpsn_auc_mean", opt_to_json(r.bias.bpsn_auc_mean)},
        {"bnsp_auc_mean", opt_to_json(r.bias.bnsp_auc_mean)}}},
      {"explainability",
       {{"iou_f1", r.explainability.iou_f1},
        {"token_f1", r.explainability.token_f1},
        {"auprc", opt_to_json(r.explainability.auprc)},
        {"auprc_macro", opt_to_json(r.explainability.auprc_macro)},
        {"comprehensiveness", r.explainability.comprehensiveness},
        {"sufficiency", r.explainability.sufficiency}}},
      {"mean_loss",
       {{"pred", r.mean_loss.pred}, {"att", r.mean_loss.att}, {"total", r.mean_loss.total}}}};
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.n_posts = j.at("n_posts").get<std::size_t>();
  const json& perf = j.at("performance");
  r.performance.accuracy = perf.at("accuracy").get<double>();
  r.performance.macro_f1 = perf.at("macro_f1").get<double>();
  r.performance.auroc = opt_from_json(perf.at("auroc"));
  const json& bias = j.at("bias");
  for (const auto& [community, cb] : bias.at("per_community").items()) {
    CommunityBias b;
    b.subgroup_auc = opt_from_json(cb.at("subgroup_auc"));
    b.bpsn_auc = opt_from_json(cb.at("bpsn_auc"));
    b.bnsp_auc = opt_from_json(cb.at("bnsp_auc"));
    r.bias.per_community.emplace(community, b);
  }
  r.bias.subgroup_auc_mean = opt_from_json(bias.at("subgroup_auc_mean"));
  r.bias.bpsn_auc_mean = opt_from_json(bias.at("bpsn_auc_mean"));
  r.bias.bnsp_auc_mean = opt_from_json(bias.at("bnsp_auc_mean"));
  const json& ex = j.at("explainability");
  r.explainability.iou_f1 = ex.at("iou_f1").get<double>();
  r.explainability.token_f1 = ex.at("token_f1").get<double>();
  r.explainability.auprc = opt_from_json(ex.at("auprc"));
  r.explainability.auprc_macro = opt_from_json(ex.at("auprc_macro"));
  r.explainability.comprehensiveness = ex.at("comprehensiveness").get<double>();
  r.explainability.sufficiency = ex.at("sufficiency").get<double>();
  const json& loss = j.at("mean_loss");
  r.mean_loss.pred = loss.at("pred").get<double>();
  r.mean_loss.att = loss.at("att").get<double>();
  r.mean_loss.total = loss.at("total").get<double>();
  return r;
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::optional<double> parse_opt_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                const std::string& expected_header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != expected_header) {
    throw std::invalid_argument("csv: unexpected header '" + line + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

constexpr const char* kPerformanceHeader = "lambda,accuracy,f1_score,auroc";
constexpr const char* kBiasHeader = "lambda,subgroup_auc,bpsn,bnsp";
constexpr const char* kExplainabilityHeader =
    "lambda,iou_f1,token_f1,auprc,comprehensiveness,sufficiency";
constexpr const char* kBiasByCommunityHeader =
    "lambda,community,subgroup_auc,bpsn,bnsp";

}  // namespace

std::string performance_csv(std::span<const LambdaReport> rows) {
  std::string out = std::string(kPerformanceHeader) + "\n";
  for (const LambdaReport& row : rows) {
    out += format_double(row.lambda) + ',' + format_double(row.report.performance.accuracy) +
           ',' + format_double(row.report.performance.macro_f1) + ',' +
           opt_cell(row.report.performance.auroc) + '\n';
  }
  return out;
}

std::string bias_csv(std::span<const LambdaReport> rows) {
  std::string out = std::string(kBiasHeader) + "\n";
  for (const LambdaReport& row : rows) {
    out += format_double(row.lambda) + ',' + opt_cell(row.report.bias.subgroup_auc_mean) +
           ',' + opt_cell(row.report.bias.bpsn_auc_mean) + ',' +
           opt_cell(row.report.bias.bnsp_auc_mean) + '\n';
  }
  return out;
}

std::string explainability_csv(std::span<const LambdaReport> rows) {
  std::string out = std::string(kExplainabilityHeader) + "\n";
  for (const LambdaReport& row : rows) {
    const ExplainabilityMetrics& e = row.report.explainability;
    out += format_double(row.lambda) + ',' + format_double(e.iou_f1) + ',' +
           format_double(e.token_f1) + ',' + opt_cell(e.auprc) + ',' +
           format_double(e.comprehensiveness) + ',' + format_double(e.sufficiency) + '\n';
  }
  return out;
}

std::string bias_by_community_csv(std::span<const LambdaReport> rows) {
  std::string out = std::string(kBiasByCommunityHeader) + "\n";
  for (const LambdaReport& row : rows) {
    for (const auto& [community, cb] : row.report.bias.per_community) {
      out += format_double(row.lambda) + ',' + csv_escape(community) + ',' +
             opt_cell(cb.subgroup_auc) + ',' + opt_cell(cb.bpsn_auc) + ',' +
             opt_cell(cb.bnsp_auc) + '\n';
    }
  }
  return out;
}

std::vector<LambdaReport> parse_performance_csv(const std::string& text) {
  std::vector<LambdaReport> out;
  for (const auto& fields : parse_csv(text, kPerformanceHeader)) {
    if (fields.size() != 4) throw std::invalid_argument("performance csv: bad row");
    LambdaReport row;
    row.lambda = parse_double(fields[0]);
    row.report.performance.accuracy = parse_double(fields[1]);
    row.report.performance.macro_f1 = parse_double(fields[2]);
    row.report.performance.auroc = parse_opt_cell(fields[3]);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<LambdaReport> parse_bias_csv(const std::string& text) {
  std::vector<LambdaReport> out;
  for (const auto& fields : parse_csv(text, kBiasHeader)) {
    if (fields.size() != 4) throw std::invalid_argument("bias csv: bad row");
    LambdaReport row;
    row.lambda = parse_double(fields[0]);
    row.report.bias.subgroup_auc_mean = parse_opt_cell(fields[1]);
    row.report.bias.bpsn_auc_mean = parse_opt_cell(fields[2]);
    row.report.bias.bnsp_auc_mean = parse_opt_cell(fields[3]);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<LambdaReport> parse_explainability_csv(const std::string& text) {
  std::vector<LambdaReport> out;
  for (const auto& fields : parse_csv(text, kExplainabilityHeader)) {
    if (fields.size() != 6) throw std::invalid_argument("explainability csv: bad row");
    LambdaReport row;
    row.lambda = parse_double(fields[0]);
    row.report.explainability.iou_f1 = parse_double(fields[1]);
    row.report.explainability.token_f1 = parse_double(fields[2]);
    row.report.explainability.auprc = parse_opt_cell(fields[3]);
    row.report.explainability.comprehensiveness = parse_double(fields[4]);
    row.report.explainability.sufficiency = parse_double(fields[5]);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<LambdaReport> parse_bias_by_community_csv(const std::string& text) {
  std::vector<LambdaReport> out;
  for (const auto& fields : parse_csv(text, kBiasByCommunityHeader)) {
    if (fields.size() != 5) throw std::invalid_argument("bias by community csv: bad row");
    const double lambda = parse_double(fields[0]);
    if (out.empty() || out.back().lambda != lambda) {
      out.push_back(LambdaReport{lambda, {}});
    }
    CommunityBias cb;
    cb.subgroup_auc = parse_opt_cell(fields[2]);
    cb.bpsn_auc = parse_opt_cell(fields[3]);
    cb.bnsp_auc = parse_opt_cell(fields[4]);
    out.back().report.bias.per_community.emplace(fields[1], cb);
  }
  return out;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write file: " + tmp.string());
    }
    out << content;
    if (!out) {
      throw std::runtime_error("short write: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace toxattn
