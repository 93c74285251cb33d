#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "causal_probe/analysis.hpp"
#include "causal_probe/lexicon.hpp"
#include "causal_probe/metrics.hpp"
#include "causal_probe/scoring.hpp"
#include "causal_probe/types.hpp"

namespace causal_probe {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class Split { Calib, Test };

std::string_view to_string(Split split) noexcept;
Split parse_split(std::string_view text);

struct StoredSample {
  ReviewSample sample;
  Split split = Split::Test;
  std::optional<OpinionCounts> counts;
};

struct StoredRecord {
  Split split = Split::Test;
  PredictionRecord record;
};

/// A (prompt, sample) pair that produced no usable distribution.
struct ScoringFailure {
  Split split = Split::Test;
  std::string prompt_id;
  std::string sample_id;
  std::string error;
};

/// Settings the report builder needs; persisted so `report` reproduces `run`.
struct ReportSettings {
  EntropyBase entropy_base = EntropyBase::Bits;
  DistributionSource source = DistributionSource::Calibrated;
  bool oep_global_means = true;
  std::uint64_t seed = 0;
  std::size_t random_subset_size = 500;
  double decile_fraction = 0.10;
  std::vector<std::string> partition_prompts;
};

struct StoreManifest {
  std::string tool_version{kToolVersion};
  std::string config_hash;
  std::string pack_hash;
  std::string dataset_hash;
  std::string pack_name;
  std::vector<PromptTemplate> prompts;
  ReportSettings settings;
  std::vector<ScoringFailure> failures;
  std::vector<std::string> notes;
};

/// Hashes compared on resume; any difference is ManifestMismatch.
bool same_inputs(const StoreManifest& a, const StoreManifest& b) noexcept;

/// Run output directory:
///   manifest.json     input hashes, prompts, report settings, failures
///   samples.jsonl     calib + test samples with opinion counts
///   records.jsonl     one PredictionRecord per (prompt, split, sample)
///   calibration.json  lambda fit per prompt
///
/// Records are kept in (prompt order, split, sample id) order.
struct ResultsStore {
  StoreManifest manifest;
  std::vector<StoredSample> samples;
  std::vector<StoredRecord> records;
  std::map<std::string, LambdaFit> calibration;

  void save(const std::filesystem::path& dir) const;
  static ResultsStore load(const std::filesystem::path& dir);
  static std::optional<StoreManifest> read_manifest(const std::filesystem::path& dir);

  /// Records of one prompt and split, in stored order.
  std::vector<PredictionRecord> records_for(std::string_view prompt_id, Split split) const;
};

/// Writes `content` to `path` via a temp file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace causal_probe
