#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "causal_probe/lexicon.hpp"
#include "causal_probe/types.hpp"

namespace causal_probe {

enum class SubsetKind {
  Overall,
  Random,
  SameCorrect,
  SameIncorrect,
  Diverse,
  LowDiversityDecile,
  HighDiversityDecile,
  DiverseC1Wrong,
  DiverseC2Wrong,
  DiverseC3Wrong,
};

std::string_view to_string(SubsetKind kind) noexcept;

/// Which distribution an argmax is taken from.
enum class DistributionSource { Calibrated, Raw };

std::string_view to_string(DistributionSource source) noexcept;

using GoldIndex = std::map<std::string, RatingLabel>;

/// Per-sample argmax labels for each prompt over a common id set.
struct AlignedPredictions {
  std::vector<std::string> ids;                   // ascending
  std::vector<RatingLabel> golds;                 // parallel to ids
  std::vector<std::vector<RatingLabel>> argmaxes;  // [prompt][sample]
};

/// Throws MisalignedRecords when prompts cover different ids (or an id
/// repeats), MissingCalibration when a calibrated distribution is needed
/// but absent, UnknownIds when a gold label is missing.
AlignedPredictions align_predictions(std::span<const std::vector<PredictionRecord>> records_by_prompt,
                                     const GoldIndex& golds, DistributionSource source = DistributionSource::Calibrated);

struct Partition {
  std::vector<std::string> same_correct;
  std::vector<std::string> same_incorrect;
  std::vector<std::string> diverse;
};

/// Same Correct: every prompt's argmax equals the gold label.
/// Same Incorrect: all argmaxes agree but differ from gold.
/// Diverse: the argmaxes disagree.
Partition partition(const AlignedPredictions& aligned);

Partition partition(std::span<const std::vector<PredictionRecord>> records_by_prompt, const GoldIndex& golds,
                    DistributionSource source = DistributionSource::Calibrated);

/// Members of `diverse_ids` whose argmax under prompt `prompt_index` (0-based) is wrong.
std::vector<std::string> diverse_failures(std::span<const std::string> diverse_ids, const AlignedPredictions& aligned,
                                          std::size_t prompt_index);

struct DecileSlices {
  std::vector<std::string> lowest;
  std::vector<std::string> highest;
};

/// Sorts by (diversity, id) and takes max(1, floor(fraction * n)) ids from
/// each end. Requires 0 < fraction <= 0.5 and a non-empty subset.
DecileSlices decile_slices(std::span<const std::string> ids, const std::map<std::string, double>& diversity,
                           double fraction = 0.10);

struct SubsetReport {
  SubsetKind kind = SubsetKind::Overall;
  std::string name;
  std::size_t n_samples = 0;
  std::optional<double> words_per_sample;
  std::optional<double> pos_mean, pos_std, neg_mean, neg_std, pos_plus_neg;
  std::optional<std::array<double, kNumLabels>> label_pct;
  std::optional<std::array<int, kNumLabels>> label_pct_rounded;
  std::optional<double> mean_diversity;
  std::optional<double> oep;
  std::optional<double> oep_per_sample;
};

struct SubsetContext {
  std::map<std::string, const ReviewSample*> samples;
  std::map<std::string, OpinionCounts> counts;  // empty: no opinion statistics
  std::map<std::string, double> diversity;      // empty: no diversity column
  std::optional<OpinionMeans> oep_means;        // set: global means; unset: per-subset means
};

/// Builds the lookup context. `dataset` must outlive the result.
SubsetContext make_subset_context(const Dataset& dataset, std::span<const OpinionCounts> counts,
                                  std::map<std::string, double> diversity);

/// Statistics over `ids`; all aggregates are absent when `ids` is empty.
/// Throws UnknownIds for ids outside the dataset (or missing counts/diversity).
SubsetReport subset_stats(SubsetKind kind, std::string name, std::span<const std::string> ids,
                          const SubsetContext& ctx);

/// Largest-remainder rounding of percentages to integers summing to the
/// rounded total; ties go to the lower label.
std::array<int, kNumLabels> round_percentages(const std::array<double, kNumLabels>& pct);

}  // namespace causal_probe
