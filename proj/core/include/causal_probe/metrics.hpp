#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "causal_probe/types.hpp"

namespace causal_probe {

enum class EntropyBase { Bits, Nats };

double accuracy(std::span<const RatingLabel> preds, std::span<const RatingLabel> golds);

/// Support-weighted mean of per-class F1; a class with no true and no
/// predicted instances contributes F1 = 0 (and weight 0).
double weighted_f1(std::span<const RatingLabel> preds, std::span<const RatingLabel> golds);

/// Shannon entropy with 0 log 0 = 0.
double entropy(const LabelDistribution& dist, EntropyBase base = EntropyBase::Bits);

/// base^entropy, computed from the same entropy value.
double perplexity(const LabelDistribution& dist, EntropyBase base = EntropyBase::Bits);

/// Largest possible entropy over five labels in the given base.
double max_entropy(EntropyBase base = EntropyBase::Bits);

/// Fisher-Pearson moment coefficient g1 = m3 / m2^1.5 (biased).
double skewness(std::span<const double> values);

/// Half the L1 distance: 0 for identical, 1 for disjoint support.
double total_variation(const LabelDistribution& p1, const LabelDistribution& p2);

/// Mean total variation over all unordered pairs.
double sample_diversity(std::span<const LabelDistribution> dists);

struct EntropyHistogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::uint64_t> counts;
};

inline constexpr std::size_t kEntropyBins = 50;

/// Equal-width bins over [0, max_entropy]; the top edge falls in the last bin.
EntropyHistogram entropy_histogram(std::span<const double> entropies, EntropyBase base = EntropyBase::Bits,
                                   std::size_t bins = kEntropyBins);

struct PromptMetrics {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  double entropy_mean = 0.0;
  std::optional<double> entropy_skewness;  // absent with < 3 values or zero variance
  std::size_t n = 0;
};

PromptMetrics prompt_metrics(std::span<const LabelDistribution> dists, std::span<const RatingLabel> golds,
                             EntropyBase base = EntropyBase::Bits);

}  // namespace causal_probe
