#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "causal_probe/analysis.hpp"
#include "causal_probe/metrics.hpp"
#include "causal_probe/scoring.hpp"
#include "causal_probe/store.hpp"

namespace causal_probe {

struct PromptSummary {
  std::string prompt_id;
  CausalTag causal_tag = CausalTag::Custom;
  std::optional<std::string> variant_tag;
  PromptMetrics metrics;
  std::optional<LambdaFit> fit;
  EntropyHistogram histogram;
};

struct DiversityRow {
  std::string sample_id;
  RatingLabel gold{1};
  std::vector<RatingLabel> argmaxes;  // one per partition prompt
  double diversity = 0.0;
  std::string cell;  // SameCorrect, SameIncorrect or Diverse
};

struct Report {
  std::string pack_name;
  ReportSettings settings;
  std::size_t n_test = 0;
  std::vector<PromptSummary> prompts;
  std::vector<std::string> partition_prompts;  // empty when fewer than two prompts completed
  std::optional<Partition> partition;
  std::vector<DiversityRow> diversity;  // ascending sample id
  std::vector<SubsetReport> subsets;
  std::vector<std::string> notes;
};

/// Metrics, partition and subset rows for the store's test split.
/// Throws IncompleteStore when no prompt has test records.
Report build_report(const ResultsStore& store);
Report build_report(const ResultsStore& store, const ReportSettings& settings);

enum class ReportFormat { Csv, Json, Both };
ReportFormat parse_report_format(std::string_view text);

std::string report_json(const Report& report);
std::string metrics_csv(const Report& report);
std::string subsets_csv(const Report& report);
std::string entropy_hist_json(const Report& report);
std::string diversity_jsonl(const Report& report);
std::string lambda_json(const Report& report);

/// CSV: metrics.csv, subsets.csv. JSON: report.json, entropy_hist.json,
/// diversity.jsonl, lambda.json.
void write_report(const Report& report, const std::filesystem::path& dir, ReportFormat format = ReportFormat::Both);

/// Fixed 4-decimal rendering used by the CSV files; "-0.0000" prints as "0.0000".
std::string format_fixed4(double value);

}  // namespace causal_probe
