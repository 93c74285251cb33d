#include "causal_probe/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "causal_probe/error.hpp"
#include "causal_probe/lexicon.hpp"
#include "causal_probe/rng.hpp"
#include "json.hpp"

namespace causal_probe {
namespace {

using nlohmann::json;

constexpr std::uint64_t kRandomSubsetStream = 2;

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string opt4(const std::optional<double>& v) { return v ? format_fixed4(*v) : std::string(); }

const LabelDistribution& pick(const PredictionRecord& rec, DistributionSource source) {
  if (source == DistributionSource::Raw) return rec.raw;
  if (!rec.calibrated) {
    fail(ErrorKind::MissingCalibration,
         "record for prompt '" + rec.prompt_id + "', sample '" + rec.sample_id + "' has no calibrated distribution");
  }
  return *rec.calibrated;
}

// CSV fields here never contain quotes, but prompt ids are user data.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_fixed4(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  std::string s(buf);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

Report build_report(const ResultsStore& store) { return build_report(store, store.manifest.settings); }

Report build_report(const ResultsStore& store, const ReportSettings& settings) {
  Report rep;
  rep.pack_name = store.manifest.pack_name;
  rep.settings = settings;
  rep.notes = store.manifest.notes;

  Dataset test;
  test.name = "test";
  std::vector<OpinionCounts> counts;
  bool have_counts = true;
  for (const auto& s : store.samples) {
    if (s.split != Split::Test) continue;
    test.samples.push_back(s.sample);
    if (s.counts) {
      counts.push_back(*s.counts);
    } else {
      have_counts = false;
    }
  }
  std::sort(test.samples.begin(), test.samples.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  rep.n_test = test.samples.size();
  GoldIndex golds;
  for (const auto& s : test.samples) golds.emplace(s.id, s.gold);

  std::map<std::string, std::vector<PredictionRecord>> by_prompt;
  for (const auto& p : store.manifest.prompts) {
    auto recs = store.records_for(p.id, Split::Test);
    if (recs.empty()) {
      rep.notes.push_back("prompt '" + p.id + "' has no test records and is left out");
      continue;
    }
    std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });

    PromptSummary sum;
    sum.prompt_id = p.id;
    sum.causal_tag = p.causal_tag;
    sum.variant_tag = p.variant_tag;
    std::vector<LabelDistribution> dists;
    std::vector<RatingLabel> g;
    std::vector<double> ents;
    for (const auto& r : recs) {
      const auto it = golds.find(r.sample_id);
      if (it == golds.end()) fail(ErrorKind::UnknownIds, "record for unknown sample '" + r.sample_id + "'");
      dists.push_back(pick(r, settings.source));
      g.push_back(it->second);
      ents.push_back(entropy(dists.back(), settings.entropy_base));
    }
    sum.metrics = prompt_metrics(dists, g, settings.entropy_base);
    sum.histogram = entropy_histogram(ents, settings.entropy_base);
    if (const auto f = store.calibration.find(p.id); f != store.calibration.end()) sum.fit = f->second;
    rep.prompts.push_back(std::move(sum));
    by_prompt.emplace(p.id, std::move(recs));
  }
  if (rep.prompts.empty()) fail(ErrorKind::IncompleteStore, "store has no test records for any prompt");

  std::vector<std::string> part_ids;
  for (const auto& id : settings.partition_prompts) {
    if (by_prompt.contains(id)) part_ids.push_back(id);
  }

  std::vector<std::string> universe;
  for (const auto& s : test.samples) universe.push_back(s.id);

  std::map<std::string, double> diversity;
  std::optional<AlignedPredictions> aligned;
  if (part_ids.size() < 2) {
    rep.notes.push_back("diversity and partition need at least two prompts; only " + std::to_string(part_ids.size()) +
                        " available");
  } else {
    // Samples skipped under any partition prompt drop out of the joint analysis.
    std::set<std::string> common(universe.begin(), universe.end());
    for (const auto& id : part_ids) {
      std::set<std::string> have;
      for (const auto& r : by_prompt.at(id)) have.insert(r.sample_id);
      std::erase_if(common, [&](const std::string& s) { return !have.contains(s); });
    }
    if (common.size() < universe.size()) {
      rep.notes.push_back(std::to_string(universe.size() - common.size()) +
                          " test samples lack a record under some partition prompt and are left out of subsets");
    }
    universe.assign(common.begin(), common.end());
    if (universe.empty()) fail(ErrorKind::IncompleteStore, "no test sample is scored under every partition prompt");

    std::vector<std::vector<PredictionRecord>> aligned_recs;
    for (const auto& id : part_ids) {
      std::vector<PredictionRecord> keep;
      for (const auto& r : by_prompt.at(id)) {
        if (common.contains(r.sample_id)) keep.push_back(r);
      }
      aligned_recs.push_back(std::move(keep));
    }
    aligned = align_predictions(aligned_recs, golds, settings.source);
    rep.partition = partition(*aligned);
    rep.partition_prompts = part_ids;

    std::set<std::string> sc(rep.partition->same_correct.begin(), rep.partition->same_correct.end());
    std::set<std::string> si(rep.partition->same_incorrect.begin(), rep.partition->same_incorrect.end());
    for (std::size_t k = 0; k < aligned->ids.size(); ++k) {
      std::vector<LabelDistribution> dists;
      for (const auto& recs : aligned_recs) dists.push_back(pick(recs[k], settings.source));
      DiversityRow row;
      row.sample_id = aligned->ids[k];
      row.gold = aligned->golds[k];
      for (const auto& a : aligned->argmaxes) row.argmaxes.push_back(a[k]);
      row.diversity = sample_diversity(dists);
      row.cell = sc.contains(row.sample_id) ? "SameCorrect" : si.contains(row.sample_id) ? "SameIncorrect" : "Diverse";
      diversity.emplace(row.sample_id, row.diversity);
      rep.diversity.push_back(std::move(row));
    }
  }

  if (!have_counts) {
    counts.clear();
    rep.notes.push_back("no opinion lexicon was configured; opinion columns are empty");
  }
  auto ctx = make_subset_context(test, counts, diversity);
  if (settings.oep_global_means && !counts.empty()) {
    std::vector<OpinionCounts> in_universe;
    std::set<std::string> u(universe.begin(), universe.end());
    for (const auto& c : counts) {
      if (u.contains(c.sample_id)) in_universe.push_back(c);
    }
    const auto m = corpus_means(in_universe);
    if (m.mean_pos > 0.0 && m.mean_neg > 0.0) ctx.oep_means = m;
  }

  auto add = [&](SubsetKind kind, std::string name, const std::vector<std::string>& ids) {
    rep.subsets.push_back(subset_stats(kind, std::move(name), ids, ctx));
  };
  auto add_deciles = [&](const std::string& parent, const std::vector<std::string>& ids) {
    if (diversity.empty() || ids.empty()) return;
    const auto slices = decile_slices(ids, diversity, settings.decile_fraction);
    add(SubsetKind::LowDiversityDecile, parent + "/low", slices.lowest);
    add(SubsetKind::HighDiversityDecile, parent + "/high", slices.highest);
  };

  add(SubsetKind::Overall, "Overall", universe);
  {
    auto shuffled = universe;
    Rng rng(derive_seed(settings.seed, kRandomSubsetStream));
    rng.shuffle(std::span(shuffled));
    shuffled.resize(std::min(settings.random_subset_size, shuffled.size()));
    add(SubsetKind::Random, "Random", shuffled);
  }
  if (rep.partition) {
    add(SubsetKind::SameCorrect, "SameCorrect", rep.partition->same_correct);
    add(SubsetKind::SameIncorrect, "SameIncorrect", rep.partition->same_incorrect);
    add(SubsetKind::Diverse, "Diverse", rep.partition->diverse);
    constexpr SubsetKind kWrong[] = {SubsetKind::DiverseC1Wrong, SubsetKind::DiverseC2Wrong,
                                     SubsetKind::DiverseC3Wrong};
    for (std::size_t i = 0; i < part_ids.size() && i < 3; ++i) {
      add(kWrong[i], "Diverse/" + part_ids[i] + "-wrong", diverse_failures(rep.partition->diverse, *aligned, i));
    }
    add_deciles("Overall", universe);
    add_deciles("SameCorrect", rep.partition->same_correct);
    add_deciles("SameIncorrect", rep.partition->same_incorrect);
    add_deciles("Diverse", rep.partition->diverse);
  }
  return rep;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "json") return ReportFormat::Json;
  if (text == "both") return ReportFormat::Both;
  fail(ErrorKind::InvalidArgument, "report format must be csv, json or both");
}

std::string report_json(const Report& rep) {
  json prompts = json::array();
  for (const auto& p : rep.prompts) {
    json j = {{"id", p.prompt_id},
              {"causal_tag", to_string(p.causal_tag)},
              {"variant_tag", p.variant_tag ? json(*p.variant_tag) : json(nullptr)},
              {"n", p.metrics.n},
              {"accuracy", p.metrics.accuracy},
              {"weighted_f1", p.metrics.weighted_f1},
              {"entropy_mean", p.metrics.entropy_mean},
              {"entropy_skewness", opt(p.metrics.entropy_skewness)}};
    if (p.fit) {
      j["lambda"] = p.fit->lambda.lambda();
      j["lambda_objective"] = p.fit->objective;
      j["uniform_objective"] = p.fit->uniform_objective;
      j["lambda_iterations"] = p.fit->iterations;
    } else {
      j["lambda"] = nullptr;
    }
    prompts.push_back(std::move(j));
  }

  json part = nullptr;
  if (rep.partition) {
    part = {{"prompts", rep.partition_prompts},
            {"same_correct", rep.partition->same_correct},
            {"same_incorrect", rep.partition->same_incorrect},
            {"diverse", rep.partition->diverse}};
  }

  json subsets = json::array();
  for (const auto& s : rep.subsets) {
    subsets.push_back({{"kind", to_string(s.kind)},
                       {"name", s.name},
                       {"n_samples", s.n_samples},
                       {"words_per_sample", opt(s.words_per_sample)},
                       {"pos_mean", opt(s.pos_mean)},
                       {"pos_std", opt(s.pos_std)},
                       {"neg_mean", opt(s.neg_mean)},
                       {"neg_std", opt(s.neg_std)},
                       {"pos_plus_neg", opt(s.pos_plus_neg)},
                       {"label_pct", s.label_pct ? json(*s.label_pct) : json(nullptr)},
                       {"label_pct_rounded", s.label_pct_rounded ? json(*s.label_pct_rounded) : json(nullptr)},
                       {"mean_diversity", opt(s.mean_diversity)},
                       {"oep", opt(s.oep)},
                       {"oep_per_sample", opt(s.oep_per_sample)}});
  }

  const auto& st = rep.settings;
  const json doc = {
      {"tool_version", kToolVersion},
      {"pack", rep.pack_name},
      {"settings",
       {{"entropy_base", st.entropy_base == EntropyBase::Bits ? "bits" : "nat"},
        {"distribution", to_string(st.source)},
        {"oep_means", st.oep_global_means ? "global" : "local"},
        {"seed", st.seed},
        {"random_subset_size", st.random_subset_size},
        {"decile_fraction", st.decile_fraction}}},
      {"n_test", rep.n_test},
      {"prompts", prompts},
      {"partition", part},
      {"subsets", subsets},
      {"notes", rep.notes},
  };
  return doc.dump(2) + "\n";
}

std::string metrics_csv(const Report& rep) {
  std::string out = "prompt_id,causal_tag,n,accuracy,weighted_f1,entropy_mean,entropy_skewness\n";
  for (const auto& p : rep.prompts) {
    out += csv_field(p.prompt_id) + "," + std::string(to_string(p.causal_tag)) + "," + std::to_string(p.metrics.n) +
           "," + format_fixed4(p.metrics.accuracy) + "," + format_fixed4(p.metrics.weighted_f1) + "," +
           format_fixed4(p.metrics.entropy_mean) + "," + opt4(p.metrics.entropy_skewness) + "\n";
  }
  return out;
}

std::string subsets_csv(const Report& rep) {
  std::string out =
      "kind,subset,n_samples,words_per_sample,pos_mean,pos_std,neg_mean,neg_std,pos_plus_neg,"
      "label1_pct,label2_pct,label3_pct,label4_pct,label5_pct,mean_diversity,oep,oep_per_sample\n";
  for (const auto& s : rep.subsets) {
    out += std::string(to_string(s.kind)) + "," + csv_field(s.name) + "," + std::to_string(s.n_samples) + "," +
           opt4(s.words_per_sample) + "," + opt4(s.pos_mean) + "," + opt4(s.pos_std) + "," + opt4(s.neg_mean) + "," +
           opt4(s.neg_std) + "," + opt4(s.pos_plus_neg);
    for (std::size_t i = 0; i < kNumLabels; ++i) {
      out += ",";
      if (s.label_pct_rounded) out += std::to_string((*s.label_pct_rounded)[i]);
    }
    out += "," + opt4(s.mean_diversity) + "," + opt4(s.oep) + "," + opt4(s.oep_per_sample) + "\n";
  }
  return out;
}

std::string entropy_hist_json(const Report& rep) {
  json prompts = json::object();
  double lo = 0.0;
  double hi = max_entropy(rep.settings.entropy_base);
  for (const auto& p : rep.prompts) {
    prompts[p.prompt_id] = p.histogram.counts;
    lo = p.histogram.lo;
    hi = p.histogram.hi;
  }
  const json doc = {{"entropy_base", rep.settings.entropy_base == EntropyBase::Bits ? "bits" : "nat"},
                    {"lo", lo},
                    {"hi", hi},
                    {"bins", kEntropyBins},
                    {"prompts", prompts}};
  return doc.dump(2) + "\n";
}

std::string diversity_jsonl(const Report& rep) {
  std::string out;
  for (const auto& row : rep.diversity) {
    json argmax = json::object();
    for (std::size_t i = 0; i < row.argmaxes.size(); ++i) argmax[rep.partition_prompts[i]] = row.argmaxes[i].value();
    out += json{{"sample_id", row.sample_id},
                {"gold", row.gold.value()},
                {"argmax", argmax},
                {"diversity", row.diversity},
                {"cell", row.cell}}
               .dump() +
           "\n";
  }
  return out;
}

std::string lambda_json(const Report& rep) {
  json doc = json::object();
  for (const auto& p : rep.prompts) {
    if (p.fit) doc[p.prompt_id] = p.fit->lambda.lambda();
  }
  return doc.dump(2) + "\n";
}

void write_report(const Report& rep, const std::filesystem::path& dir, ReportFormat format) {
  if (format != ReportFormat::Json) {
    write_file_atomic(dir / "metrics.csv", metrics_csv(rep));
    write_file_atomic(dir / "subsets.csv", subsets_csv(rep));
  }
  if (format != ReportFormat::Csv) {
    write_file_atomic(dir / "report.json", report_json(rep));
    write_file_atomic(dir / "entropy_hist.json", entropy_hist_json(rep));
    write_file_atomic(dir / "diversity.jsonl", diversity_jsonl(rep));
    write_file_atomic(dir / "lambda.json", lambda_json(rep));
  }
}

}  // namespace causal_probe
