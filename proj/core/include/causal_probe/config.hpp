#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "causal_probe/analysis.hpp"
#include "causal_probe/metrics.hpp"
#include "causal_probe/scoring.hpp"

namespace causal_probe {

struct BackendConfig {
  std::string kind = "replay";  // "replay" or "openai"
  std::filesystem::path fixture;
  std::string model = "text-davinci-002";
  std::string base_url;  // empty: CAUSAL_PROBE_BASE_URL, then the OpenAI default
  int top_logprobs = 5;
  int concurrency = 4;
  double requests_per_second = 0.0;
  double timeout_seconds = 60.0;
};

enum class UnscorablePolicy { Error, Skip };

struct RunConfig {
  std::filesystem::path dataset;
  std::optional<std::filesystem::path> calib_dataset;  // unset: carve calibration from `dataset`
  std::string prompt_pack = "yelp-causal-v1";          // file path or built-in name
  BackendConfig backend;
  std::filesystem::path cache_dir = "cache";
  std::filesystem::path output_dir = "out";
  std::size_t calib_size = 1000;
  std::optional<std::size_t> test_size;  // unset: min(10000, largest balanced size)
  std::uint64_t seed = 0;
  EntropyBase entropy_base = EntropyBase::Bits;
  std::optional<SurfaceFormMap> surface_forms;
  std::optional<std::filesystem::path> pos_lexicon;
  std::optional<std::filesystem::path> neg_lexicon;
  DistributionSource partition_on = DistributionSource::Calibrated;
  bool oep_global_means = true;
  std::vector<std::string> partition_prompts;  // empty: first prompt per causal tag C1..C3
  std::size_t random_subset_size = 500;
  double decile_fraction = 0.10;
  std::optional<LabelDistribution> target_prior;  // unset: uniform
  UnscorablePolicy on_unscorable = UnscorablePolicy::Error;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// Reads a TOML run config. Relative paths resolve against the config
/// file's directory. See README for the key reference.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::string_view toml_text, const std::filesystem::path& base_dir);

EntropyBase parse_entropy_base(std::string_view text);
std::string_view to_string(EntropyBase base) noexcept;
DistributionSource parse_distribution_source(std::string_view text);

}  // namespace causal_probe
