#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "causal_probe/backend.hpp"
#include "causal_probe/cache.hpp"
#include "causal_probe/config.hpp"
#include "causal_probe/error.hpp"
#include "causal_probe/metrics.hpp"
#include "causal_probe/prompt_pack.hpp"
#include "causal_probe/scoring.hpp"
#include "causal_probe/store.hpp"

namespace causal_probe {

/// Balanced downsample: shuffle each label stratum with a seeded RNG, take
/// target_size/5 from each, concatenate in label order and shuffle again.
/// Throws InvalidArgument unless target_size is a positive multiple of 5,
/// ShortStratum when a label has too few samples.
Dataset ingest(const Dataset& pool, std::uint64_t seed, std::size_t target_size);
Dataset ingest(const std::filesystem::path& path, std::uint64_t seed, std::size_t target_size);

/// 5 * (smallest per-label count).
std::size_t largest_balanced_size(const Dataset& pool);

struct Splits {
  Dataset calib;
  Dataset test;
};

/// Test split from `test_pool`; calibration from `calib_pool` when given,
/// otherwise from what the test split left over. Stream 0 of the seed
/// drives the test draw, stream 1 the calibration draw.
Splits make_splits(const Dataset& test_pool, const Dataset* calib_pool, std::uint64_t seed, std::size_t calib_size,
                   std::optional<std::size_t> test_size);

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg);

/// Shared settings for turning (prompt, sample) pairs into records.
struct EvaluationContext {
  Backend* backend = nullptr;
  const ResponseCache* cache = nullptr;  // null: always call the backend
  SurfaceFormMap forms = SurfaceFormMap::defaults();
  std::string model;
  int top_logprobs = 5;
  int concurrency = 4;
  RetryPolicy retry;
  Sleeper sleep;
  UnscorablePolicy on_unscorable = UnscorablePolicy::Error;
};

struct EvalItem {
  const PromptTemplate* prompt = nullptr;
  const ReviewSample* sample = nullptr;
  Split split = Split::Test;
};

struct EvalResult {
  std::vector<std::optional<PredictionRecord>> records;  // parallel to items
  std::vector<std::optional<Error>> errors;              // parallel to items
};

CompletionRequest make_request(const PromptTemplate& prompt, const ReviewSample& sample,
                               const EvaluationContext& ctx);

/// Runs every item, up to ctx.concurrency at a time. Results land in
/// item order whatever the completion order. With stop_on_error, workers
/// stop taking new items after the first failure.
EvalResult evaluate(const std::vector<EvalItem>& items, const EvaluationContext& ctx, bool stop_on_error = true);

struct RunOptions {
  Backend* backend = nullptr;  // overrides cfg.backend when set
  bool force = false;          // overwrite a store built from other inputs
  bool use_cache = true;
  RetryPolicy retry;
  Sleeper sleep;
};

/// Evaluates every prompt of the pack on both splits, fits lambda per
/// prompt on the calibration split and writes the results store to
/// cfg.output_dir. Split and input errors surface before any backend call.
ResultsStore run(const RunConfig& cfg, const RunOptions& options = {});

/// Default partition prompts: first prompt of each causal tag C1, C2, C3.
std::vector<std::string> default_partition_prompts(const PromptPack& pack);

/// Hashes recorded in the manifest.
std::string config_digest(const RunConfig& cfg);
std::string dataset_digest(const RunConfig& cfg);

struct VariantRow {
  std::string prompt_id;
  std::string tag;  // variant tag, "baseline" for the unperturbed prompt
  bool baseline = false;
  std::optional<PromptMetrics> metrics;
  std::optional<CalibrationVector> lambda;
  std::size_t evaluated = 0;
  std::size_t requested = 0;
  bool incomplete = false;
  bool failed = false;
  std::string error;  // first error seen, if any
};

struct CompareContext {
  const Dataset* calib = nullptr;
  const Dataset* test = nullptr;
  EvaluationContext eval;
  std::optional<LabelDistribution> target_prior;
  EntropyBase entropy_base = EntropyBase::Bits;
};

/// One row per template (baseline first in input), each with its own
/// lambda. Per-variant errors are recorded on the row. Sorted by accuracy
/// descending; failed rows last; ties keep input order.
std::vector<VariantRow> compare_variants(const PromptTemplate& baseline, const std::vector<PromptTemplate>& variants,
                                         const CompareContext& ctx);

}  // namespace causal_probe
