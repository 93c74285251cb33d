#include "causal_probe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "causal_probe/error.hpp"

namespace causal_probe {

std::string_view to_string(SubsetKind kind) noexcept {
  switch (kind) {
    case SubsetKind::Overall: return "Overall";
    case SubsetKind::Random: return "Random";
    case SubsetKind::SameCorrect: return "SameCorrect";
    case SubsetKind::SameIncorrect: return "SameIncorrect";
    case SubsetKind::Diverse: return "Diverse";
    case SubsetKind::LowDiversityDecile: return "LowDiversityDecile";
    case SubsetKind::HighDiversityDecile: return "HighDiversityDecile";
    case SubsetKind::DiverseC1Wrong: return "DiverseC1Wrong";
    case SubsetKind::DiverseC2Wrong: return "DiverseC2Wrong";
    case SubsetKind::DiverseC3Wrong: return "DiverseC3Wrong";
  }
  return "Overall";
}

std::string_view to_string(DistributionSource source) noexcept {
  return source == DistributionSource::Calibrated ? "calibrated" : "raw";
}

AlignedPredictions align_predictions(std::span<const std::vector<PredictionRecord>> records_by_prompt,
                                     const GoldIndex& golds, DistributionSource source) {
  if (records_by_prompt.empty()) fail(ErrorKind::MisalignedRecords, "no prompts to align");

  std::vector<std::map<std::string, RatingLabel>> by_prompt(records_by_prompt.size());
  for (std::size_t p = 0; p < records_by_prompt.size(); ++p) {
    for (const auto& rec : records_by_prompt[p]) {
      RatingLabel label = rec.raw.argmax();
      if (source == DistributionSource::Calibrated) {
        if (!rec.calibrated) {
          fail(ErrorKind::MissingCalibration,
               "record (" + rec.prompt_id + ", " + rec.sample_id + ") has no calibrated distribution");
        }
        label = rec.calibrated->argmax();
      }
      if (!by_prompt[p].emplace(rec.sample_id, label).second) {
        fail(ErrorKind::MisalignedRecords, "sample '" + rec.sample_id + "' appears twice for one prompt");
      }
    }
  }
  for (std::size_t p = 1; p < by_prompt.size(); ++p) {
    const bool same = by_prompt[p].size() == by_prompt[0].size() &&
                      std::equal(by_prompt[p].begin(), by_prompt[p].end(), by_prompt[0].begin(),
                                 [](const auto& a, const auto& b) { return a.first == b.first; });
    if (!same) fail(ErrorKind::MisalignedRecords, "prompt record lists cover different sample ids");
  }

  AlignedPredictions out;
  out.argmaxes.resize(by_prompt.size());
  for (const auto& [id, label] : by_prompt[0]) {
    const auto g = golds.find(id);
    if (g == golds.end()) fail(ErrorKind::UnknownIds, "no gold label for sample '" + id + "'");
    out.ids.push_back(id);
    out.golds.push_back(g->second);
  }
  for (std::size_t p = 0; p < by_prompt.size(); ++p) {
    out.argmaxes[p].reserve(out.ids.size());
    for (const auto& [id, label] : by_prompt[p]) out.argmaxes[p].push_back(label);
  }
  return out;
}

Partition partition(const AlignedPredictions& aligned) {
  Partition out;
  for (std::size_t i = 0; i < aligned.ids.size(); ++i) {
    const RatingLabel first = aligned.argmaxes[0][i];
    bool agree = true;
    for (std::size_t p = 1; p < aligned.argmaxes.size(); ++p) agree = agree && aligned.argmaxes[p][i] == first;
    if (!agree) {
      out.diverse.push_back(aligned.ids[i]);
    } else if (first == aligned.golds[i]) {
      out.same_correct.push_back(aligned.ids[i]);
    } else {
      out.same_incorrect.push_back(aligned.ids[i]);
    }
  }
  return out;
}

Partition partition(std::span<const std::vector<PredictionRecord>> records_by_prompt, const GoldIndex& golds,
                    DistributionSource source) {
  return partition(align_predictions(records_by_prompt, golds, source));
}

std::vector<std::string> diverse_failures(std::span<const std::string> diverse_ids, const AlignedPredictions& aligned,
                                          std::size_t prompt_index) {
  if (prompt_index >= aligned.argmaxes.size()) {
    fail(ErrorKind::InvalidArgument, "prompt index " + std::to_string(prompt_index) + " out of range");
  }
  std::vector<std::string> out;
  for (const auto& id : diverse_ids) {
    const auto it = std::lower_bound(aligned.ids.begin(), aligned.ids.end(), id);
    if (it == aligned.ids.end() || *it != id) fail(ErrorKind::UnknownIds, "sample '" + id + "' is not aligned");
    const auto i = static_cast<std::size_t>(it - aligned.ids.begin());
    if (aligned.argmaxes[prompt_index][i] != aligned.golds[i]) out.push_back(id);
  }
  return out;
}

DecileSlices decile_slices(std::span<const std::string> ids, const std::map<std::string, double>& diversity,
                           double fraction) {
  if (!(fraction > 0.0 && fraction <= 0.5)) fail(ErrorKind::InvalidArgument, "fraction must be in (0, 0.5]");
  if (ids.empty()) fail(ErrorKind::EmptySubset, "cannot slice an empty subset");

  std::vector<std::pair<double, std::string>> keyed;
  keyed.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = diversity.find(id);
    if (it == diversity.end()) fail(ErrorKind::UnknownIds, "no diversity for sample '" + id + "'");
    keyed.emplace_back(it->second, id);
  }
  std::sort(keyed.begin(), keyed.end());

  const std::size_t n = keyed.size();
  // The epsilon absorbs products like 0.35 * 100 = 34.999999999999993.
  auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  k = std::max<std::size_t>(k, 1);

  DecileSlices out;
  for (std::size_t i = 0; i < k; ++i) out.lowest.push_back(keyed[i].second);
  for (std::size_t i = n - k; i < n; ++i) out.highest.push_back(keyed[i].second);
  return out;
}

SubsetContext make_subset_context(const Dataset& dataset, std::span<const OpinionCounts> counts,
                                  std::map<std::string, double> diversity) {
  SubsetContext ctx;
  for (const auto& s : dataset.samples) ctx.samples.emplace(s.id, &s);
  for (const auto& c : counts) ctx.counts.emplace(c.sample_id, c);
  ctx.diversity = std::move(diversity);
  return ctx;
}

std::array<int, kNumLabels> round_percentages(const std::array<double, kNumLabels>& pct) {
  std::array<int, kNumLabels> out{};
  double total = 0.0;
  int floors = 0;
  std::array<double, kNumLabels> rem{};
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    total += pct[i];
    out[i] = static_cast<int>(std::floor(pct[i]));
    rem[i] = pct[i] - out[i];
    floors += out[i];
  }
  int missing = static_cast<int>(std::lround(total)) - floors;
  std::array<std::size_t, kNumLabels> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t j = 0; j < kNumLabels && missing > 0; ++j, --missing) ++out[order[j]];
  return out;
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd population_mean_std(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

}  // namespace

SubsetReport subset_stats(SubsetKind kind, std::string name, std::span<const std::string> ids,
                          const SubsetContext& ctx) {
  std::vector<std::string> sorted(ids.begin(), ids.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  SubsetReport r;
  r.kind = kind;
  r.name = std::move(name);
  r.n_samples = sorted.size();

  for (const auto& id : sorted) {
    if (!ctx.samples.contains(id)) fail(ErrorKind::UnknownIds, "sample '" + id + "' is not in the dataset");
  }
  if (sorted.empty()) return r;

  const double n = static_cast<double>(sorted.size());
  double words = 0.0;
  std::array<double, kNumLabels> label_counts{};
  for (const auto& id : sorted) {
    const auto* s = ctx.samples.at(id);
    words += static_cast<double>(whitespace_word_count(s->text));
    label_counts[s->gold.index()] += 1.0;
  }
  r.words_per_sample = words / n;
  std::array<double, kNumLabels> pct{};
  for (std::size_t i = 0; i < kNumLabels; ++i) pct[i] = 100.0 * label_counts[i] / n;
  r.label_pct = pct;
  r.label_pct_rounded = round_percentages(pct);

  if (!ctx.counts.empty()) {
    std::vector<double> pos, neg;
    std::vector<OpinionCounts> subset_counts;
    for (const auto& id : sorted) {
      const auto it = ctx.counts.find(id);
      if (it == ctx.counts.end()) fail(ErrorKind::UnknownIds, "no opinion counts for sample '" + id + "'");
      pos.push_back(static_cast<double>(it->second.w_pos));
      neg.push_back(static_cast<double>(it->second.w_neg));
      subset_counts.push_back(it->second);
    }
    const auto p = population_mean_std(pos);
    const auto q = population_mean_std(neg);
    r.pos_mean = p.mean;
    r.pos_std = p.std;
    r.neg_mean = q.mean;
    r.neg_std = q.std;
    r.pos_plus_neg = p.mean + q.mean;
    const OpinionMeans means = ctx.oep_means ? *ctx.oep_means : OpinionMeans{p.mean, q.mean};
    if (means.mean_pos > 0.0 && means.mean_neg > 0.0) {
      r.oep = oep(subset_counts, means.mean_pos, means.mean_neg);
      r.oep_per_sample = *r.oep / n;
    }
  }

  if (!ctx.diversity.empty()) {
    double sum = 0.0;
    for (const auto& id : sorted) {
      const auto it = ctx.diversity.find(id);
      if (it == ctx.diversity.end()) fail(ErrorKind::UnknownIds, "no diversity for sample '" + id + "'");
      sum += it->second;
    }
    r.mean_diversity = sum / n;
  }
  return r;
}

}  // namespace causal_probe
