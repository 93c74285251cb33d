#include "causal_probe/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "causal_probe/error.hpp"

namespace causal_probe {
namespace {

void check_pair(std::span<const RatingLabel> preds, std::span<const RatingLabel> golds) {
  if (preds.size() != golds.size()) fail(ErrorKind::LengthMismatch, "preds and golds differ in length");
  if (preds.empty()) fail(ErrorKind::EmptyInput, "no predictions");
}

}  // namespace

double accuracy(std::span<const RatingLabel> preds, std::span<const RatingLabel> golds) {
  check_pair(preds, golds);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == golds[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double weighted_f1(std::span<const RatingLabel> preds, std::span<const RatingLabel> golds) {
  check_pair(preds, golds);
  std::array<std::size_t, kNumLabels> tp{}, predicted{}, support{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ++predicted[preds[i].index()];
    ++support[golds[i].index()];
    if (preds[i] == golds[i]) ++tp[preds[i].index()];
  }
  // F1 = 2tp / (predicted + support); weights applied as counts, divided once.
  double score = 0.0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    if (support[c] == 0) continue;
    const double f1 = 2.0 * static_cast<double>(tp[c]) / static_cast<double>(predicted[c] + support[c]);
    score += static_cast<double>(support[c]) * f1;
  }
  return score / static_cast<double>(preds.size());
}

double entropy(const LabelDistribution& dist, EntropyBase base) {
  double h = 0.0;
  for (double p : dist.probs()) {
    if (p > 0.0) h -= p * (base == EntropyBase::Bits ? std::log2(p) : std::log(p));
  }
  return h < 0.0 ? 0.0 : h;
}

double perplexity(const LabelDistribution& dist, EntropyBase base) {
  const double h = entropy(dist, base);
  return base == EntropyBase::Bits ? std::pow(2.0, h) : std::exp(h);
}

double max_entropy(EntropyBase base) {
  return base == EntropyBase::Bits ? std::log2(static_cast<double>(kNumLabels)) : std::log(static_cast<double>(kNumLabels));
}

double skewness(std::span<const double> values) {
  if (values.size() < 3) fail(ErrorKind::TooFewValues, "skewness needs at least 3 values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0)) fail(ErrorKind::ZeroVariance, "values have zero variance");
  return m3 / std::pow(m2, 1.5);
}

double total_variation(const LabelDistribution& p1, const LabelDistribution& p2) {
  double d = 0.0;
  for (std::size_t i = 0; i < kNumLabels; ++i) d += std::fabs(p1[i] - p2[i]);
  // Rounding can push near-disjoint pairs a ulp past 1.
  return std::min(1.0, 0.5 * d);
}

double sample_diversity(std::span<const LabelDistribution> dists) {
  if (dists.size() < 2) fail(ErrorKind::TooFewDistributions, "diversity needs at least 2 distributions");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    for (std::size_t j = i + 1; j < dists.size(); ++j) {
      sum += total_variation(dists[i], dists[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

EntropyHistogram entropy_histogram(std::span<const double> entropies, EntropyBase base, std::size_t bins) {
  if (bins == 0) fail(ErrorKind::InvalidArgument, "histogram needs at least one bin");
  EntropyHistogram hist;
  hist.hi = max_entropy(base);
  hist.counts.assign(bins, 0);
  const double width = (hist.hi - hist.lo) / static_cast<double>(bins);
  for (double h : entropies) {
    auto idx = h <= hist.lo ? std::size_t{0} : static_cast<std::size_t>((h - hist.lo) / width);
    if (idx >= bins) idx = bins - 1;
    ++hist.counts[idx];
  }
  return hist;
}

PromptMetrics prompt_metrics(std::span<const LabelDistribution> dists, std::span<const RatingLabel> golds,
                             EntropyBase base) {
  if (dists.size() != golds.size()) fail(ErrorKind::LengthMismatch, "distributions and golds differ in length");
  if (dists.empty()) fail(ErrorKind::EmptyInput, "no predictions");
  std::vector<RatingLabel> preds;
  std::vector<double> entropies;
  preds.reserve(dists.size());
  entropies.reserve(dists.size());
  for (const auto& d : dists) {
    preds.push_back(d.argmax());
    entropies.push_back(entropy(d, base));
  }
  PromptMetrics m;
  m.n = dists.size();
  m.accuracy = accuracy(preds, golds);
  m.weighted_f1 = weighted_f1(preds, golds);
  double sum = 0.0;
  for (double h : entropies) sum += h;
  m.entropy_mean = sum / static_cast<double>(entropies.size());
  try {
    m.entropy_skewness = skewness(entropies);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::TooFewValues && e.kind() != ErrorKind::ZeroVariance) throw;
  }
  return m;
}

}  // namespace causal_probe
