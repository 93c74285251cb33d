#include "causal_probe/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <set>
#include <thread>

#include "causal_probe/dataset_io.hpp"
#include "causal_probe/hash.hpp"
#include "causal_probe/lexicon.hpp"
#include "causal_probe/openai_backend.hpp"
#include "causal_probe/replay_backend.hpp"
#include "causal_probe/rng.hpp"
#include "json.hpp"

namespace causal_probe {
namespace fs = std::filesystem;
namespace {

using nlohmann::json;

constexpr std::size_t kDefaultTestSize = 10000;

std::array<std::vector<const ReviewSample*>, kNumLabels> strata(const Dataset& pool) {
  std::array<std::vector<const ReviewSample*>, kNumLabels> out;
  for (const auto& s : pool.samples) out[s.gold.index()].push_back(&s);
  return out;
}

std::vector<const ReviewSample*> sorted_by_id(const Dataset& d) {
  std::vector<const ReviewSample*> out;
  for (const auto& s : d.samples) out.push_back(&s);
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->id < b->id; });
  return out;
}

std::string item_context(const EvalItem& item) {
  return "prompt '" + item.prompt->id + "', sample '" + item.sample->id + "' (" + std::string(to_string(item.split)) +
         ")";
}

bool skippable(const Error& e, UnscorablePolicy policy) {
  return policy == UnscorablePolicy::Skip && e.kind() == ErrorKind::NoLabelMass;
}

std::string file_digest_or_empty(const std::optional<fs::path>& path) {
  return path ? sha256_file(*path) : std::string();
}

}  // namespace

std::size_t largest_balanced_size(const Dataset& pool) {
  const auto s = strata(pool);
  std::size_t m = s[0].size();
  for (const auto& stratum : s) m = std::min(m, stratum.size());
  return m * kNumLabels;
}

Dataset ingest(const Dataset& pool, std::uint64_t seed, std::size_t target_size) {
  if (target_size == 0 || target_size % kNumLabels != 0) {
    fail(ErrorKind::InvalidArgument, "target size " + std::to_string(target_size) + " is not a positive multiple of 5");
  }
  const std::size_t per_label = target_size / kNumLabels;
  auto s = strata(pool);
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (s[i].size() < per_label) {
      fail(ErrorKind::ShortStratum, "label " + std::to_string(i + 1) + " has " + std::to_string(s[i].size()) +
                                        " samples, need " + std::to_string(per_label));
    }
  }
  Rng rng(seed);
  std::vector<const ReviewSample*> picked;
  picked.reserve(target_size);
  for (auto& stratum : s) {
    rng.shuffle(std::span(stratum));
    picked.insert(picked.end(), stratum.begin(), stratum.begin() + static_cast<std::ptrdiff_t>(per_label));
  }
  rng.shuffle(std::span(picked));

  Dataset out;
  out.name = pool.name;
  out.samples.reserve(picked.size());
  for (const auto* p : picked) out.samples.push_back(*p);
  return out;
}

Dataset ingest(const fs::path& path, std::uint64_t seed, std::size_t target_size) {
  return ingest(load_dataset_jsonl(path), seed, target_size);
}

Splits make_splits(const Dataset& test_pool, const Dataset* calib_pool, std::uint64_t seed, std::size_t calib_size,
                   std::optional<std::size_t> test_size) {
  Splits out;
  std::size_t n_test = 0;
  if (test_size) {
    n_test = *test_size;
  } else {
    std::size_t room = largest_balanced_size(test_pool);
    if (!calib_pool) room = room > calib_size ? room - calib_size : 0;
    n_test = std::min(kDefaultTestSize, room);
    if (n_test == 0) {
      fail(ErrorKind::ShortStratum, "dataset '" + test_pool.name + "' is too small for a calibration split of " +
                                        std::to_string(calib_size) + " plus a test split");
    }
  }
  out.test = ingest(test_pool, derive_seed(seed, 0), n_test);

  // Ids already in the test split are excluded even from a separate
  // calibration file, so the splits stay disjoint.
  const Dataset& source = calib_pool ? *calib_pool : test_pool;
  std::set<std::string> test_ids;
  for (const auto& s : out.test.samples) test_ids.insert(s.id);
  Dataset rest;
  rest.name = source.name;
  for (const auto& s : source.samples) {
    if (!test_ids.contains(s.id)) rest.samples.push_back(s);
  }
  out.calib = ingest(rest, derive_seed(seed, 1), calib_size);
  return out;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
  if (cfg.kind == "replay") return std::make_unique<ReplayBackend>(ReplayBackend::from_file(cfg.fixture));
  if (cfg.kind == "openai") {
    auto ep = OpenAIEndpoint::from_env();
    if (!cfg.base_url.empty()) ep.base_url = cfg.base_url;
    ep.timeout_seconds = cfg.timeout_seconds;
    ep.requests_per_second = cfg.requests_per_second;
    return std::make_unique<OpenAIBackend>(std::move(ep));
  }
  fail(ErrorKind::ConfigError, "unknown backend kind '" + cfg.kind + "'");
}

CompletionRequest make_request(const PromptTemplate& prompt, const ReviewSample& sample,
                               const EvaluationContext& ctx) {
  CompletionRequest req;
  req.prompt_text = prompt.render(sample.text);
  req.max_tokens = 1;
  req.temperature = 0.0;
  req.top_logprobs = ctx.top_logprobs;
  req.model_id = ctx.model;
  return req;
}

EvalResult evaluate(const std::vector<EvalItem>& items, const EvaluationContext& ctx, bool stop_on_error) {
  if (!ctx.backend) fail(ErrorKind::InvalidArgument, "evaluation needs a backend");
  EvalResult result;
  result.records.resize(items.size());
  result.errors.resize(items.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto work = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      const auto& item = items[i];
      try {
        const auto req = make_request(*item.prompt, *item.sample, ctx);
        const auto resp = ctx.cache ? cached_complete(req, *ctx.backend, *ctx.cache, ctx.retry, ctx.sleep)
                                    : complete_with_retry(*ctx.backend, req, ctx.retry, ctx.sleep);
        PredictionRecord rec;
        rec.sample_id = item.sample->id;
        rec.prompt_id = item.prompt->id;
        rec.topk = resp.topk;
        rec.raw = score_labels(rec.topk, ctx.forms);
        result.records[i] = std::move(rec);
      } catch (const Error& e) {
        result.errors[i] = e;
        if (stop_on_error && !skippable(e, ctx.on_unscorable)) stop.store(true);
      } catch (const std::exception& e) {
        result.errors[i] = Error(ErrorKind::IoError, e.what());
        if (stop_on_error) stop.store(true);
      }
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(items.size(), static_cast<std::size_t>(std::max(1, ctx.concurrency)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return result;
}

std::vector<std::string> default_partition_prompts(const PromptPack& pack) {
  std::vector<std::string> out;
  for (const auto tag : {CausalTag::C1, CausalTag::C2, CausalTag::C3}) {
    for (const auto& p : pack.prompts) {
      if (p.causal_tag == tag) {
        out.push_back(p.id);
        break;
      }
    }
  }
  if (out.size() < 2) {
    out.clear();
    for (std::size_t i = 0; i < pack.prompts.size() && i < 3; ++i) out.push_back(pack.prompts[i].id);
  }
  return out;
}

std::string config_digest(const RunConfig& cfg) {
  json forms = nullptr;
  if (cfg.surface_forms) {
    forms = json::array();
    for (const auto& f : cfg.surface_forms->forms()) forms.push_back(json(std::vector<std::string>(f.begin(), f.end())));
  }
  const json doc = {
      {"dataset", sha256_file(cfg.dataset)},
      {"calib_dataset", file_digest_or_empty(cfg.calib_dataset)},
      {"backend",
       {{"kind", cfg.backend.kind},
        {"fixture", cfg.backend.kind == "replay" ? sha256_file(cfg.backend.fixture) : std::string()},
        {"model", cfg.backend.model},
        {"base_url", cfg.backend.base_url},
        {"top_logprobs", cfg.backend.top_logprobs}}},
      {"calib_size", cfg.calib_size},
      {"test_size", cfg.test_size ? json(*cfg.test_size) : json(nullptr)},
      {"seed", cfg.seed},
      {"entropy_base", to_string(cfg.entropy_base)},
      {"surface_forms", forms},
      {"pos_lexicon", file_digest_or_empty(cfg.pos_lexicon)},
      {"neg_lexicon", file_digest_or_empty(cfg.neg_lexicon)},
      {"partition_on", to_string(cfg.partition_on)},
      {"oep_means", cfg.oep_global_means ? "global" : "local"},
      {"partition_prompts", cfg.partition_prompts},
      {"random_subset_size", cfg.random_subset_size},
      {"decile_fraction", cfg.decile_fraction},
      {"target_prior", cfg.target_prior ? json(cfg.target_prior->probs()) : json(nullptr)},
      {"on_unscorable", cfg.on_unscorable == UnscorablePolicy::Skip ? "skip" : "error"},
  };
  return sha256_hex(doc.dump());
}

std::string dataset_digest(const RunConfig& cfg) {
  return sha256_hex(sha256_file(cfg.dataset) + ":" + file_digest_or_empty(cfg.calib_dataset));
}

ResultsStore run(const RunConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const PromptPack pack = resolve_prompt_pack(cfg.prompt_pack);

  std::vector<std::string> partition_ids = cfg.partition_prompts;
  if (partition_ids.empty()) partition_ids = default_partition_prompts(pack);
  for (const auto& id : partition_ids) {
    if (!pack.find(id)) fail(ErrorKind::ConfigError, "partition prompt '" + id + "' is not in the pack");
  }

  const Dataset test_pool = load_dataset_jsonl(cfg.dataset);
  std::optional<Dataset> calib_pool;
  if (cfg.calib_dataset) calib_pool = load_dataset_jsonl(*cfg.calib_dataset);
  const Splits splits =
      make_splits(test_pool, calib_pool ? &*calib_pool : nullptr, cfg.seed, cfg.calib_size, cfg.test_size);

  std::optional<OpinionLexicon> lexicon;
  if (cfg.pos_lexicon) {
    lexicon = load_opinion_lexicon(*cfg.pos_lexicon, *cfg.neg_lexicon);
    lexicon->validate();
  }

  StoreManifest manifest;
  manifest.config_hash = config_digest(cfg);
  manifest.pack_hash = prompt_pack_digest(pack);
  manifest.dataset_hash = dataset_digest(cfg);
  manifest.pack_name = pack.name;
  manifest.prompts = pack.prompts;
  manifest.settings.entropy_base = cfg.entropy_base;
  manifest.settings.source = cfg.partition_on;
  manifest.settings.oep_global_means = cfg.oep_global_means;
  manifest.settings.seed = cfg.seed;
  manifest.settings.random_subset_size = cfg.random_subset_size;
  manifest.settings.decile_fraction = cfg.decile_fraction;
  manifest.settings.partition_prompts = partition_ids;

  if (auto previous = ResultsStore::read_manifest(cfg.output_dir); previous && !options.force) {
    if (!same_inputs(*previous, manifest)) {
      fail(ErrorKind::ManifestMismatch,
           "store at " + cfg.output_dir.string() + " was built from different inputs; use --force to overwrite");
    }
  }

  std::unique_ptr<Backend> owned;
  Backend* backend = options.backend;
  if (!backend) {
    owned = make_backend(cfg.backend);
    backend = owned.get();
  }
  std::optional<ResponseCache> cache;
  if (options.use_cache) cache.emplace(cfg.cache_dir);

  EvaluationContext ctx;
  ctx.backend = backend;
  ctx.cache = cache ? &*cache : nullptr;
  ctx.forms = cfg.surface_forms.value_or(SurfaceFormMap::defaults());
  ctx.model = cfg.backend.model;
  ctx.top_logprobs = cfg.backend.top_logprobs;
  ctx.concurrency = cfg.backend.concurrency;
  ctx.retry = options.retry;
  ctx.sleep = options.sleep;
  ctx.on_unscorable = cfg.on_unscorable;

  const auto calib_sorted = sorted_by_id(splits.calib);
  const auto test_sorted = sorted_by_id(splits.test);
  std::vector<EvalItem> items;
  items.reserve(pack.prompts.size() * (calib_sorted.size() + test_sorted.size()));
  for (const auto& p : pack.prompts) {
    for (const auto* s : calib_sorted) items.push_back({&p, s, Split::Calib});
    for (const auto* s : test_sorted) items.push_back({&p, s, Split::Test});
  }

  auto result = evaluate(items, ctx);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (result.errors[i] && !skippable(*result.errors[i], cfg.on_unscorable)) {
      throw annotate(*result.errors[i], item_context(items[i]));
    }
  }

  ResultsStore store;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (result.errors[i]) {
      manifest.failures.push_back(
          {items[i].split, items[i].prompt->id, items[i].sample->id, result.errors[i]->what()});
    }
  }
  if (!manifest.failures.empty()) {
    manifest.notes.push_back(std::to_string(manifest.failures.size()) +
                             " prompt/sample pairs had no label mass and were skipped");
  }

  const LabelDistribution prior = cfg.target_prior.value_or(LabelDistribution::uniform());
  std::size_t base = 0;
  for (const auto& p : pack.prompts) {
    const std::size_t n_calib = calib_sorted.size();
    const std::size_t n_total = n_calib + test_sorted.size();
    std::vector<LabelDistribution> raws;
    std::vector<RatingLabel> golds;
    for (std::size_t k = 0; k < n_calib; ++k) {
      if (const auto& rec = result.records[base + k]) {
        raws.push_back(rec->raw);
        golds.push_back(items[base + k].sample->gold);
      }
    }
    if (raws.empty()) fail(ErrorKind::EmptyInput, "prompt '" + p.id + "' has no scorable calibration samples");
    const LambdaFit fit = learn_lambda(raws, golds, prior);
    store.calibration.emplace(p.id, fit);

    for (std::size_t k = 0; k < n_total; ++k) {
      auto& rec = result.records[base + k];
      if (!rec) continue;
      rec->calibrated = calibrate(rec->raw, fit.lambda);
      store.records.push_back({items[base + k].split, std::move(*rec)});
    }
    base += n_total;
  }

  auto add_samples = [&](const std::vector<const ReviewSample*>& sorted, Split split) {
    for (const auto* s : sorted) {
      StoredSample ss{*s, split, std::nullopt};
      if (lexicon) ss.counts = count_opinion(*s, *lexicon);
      store.samples.push_back(std::move(ss));
    }
  };
  add_samples(calib_sorted, Split::Calib);
  add_samples(test_sorted, Split::Test);

  store.manifest = std::move(manifest);
  store.save(cfg.output_dir);
  return store;
}

std::vector<VariantRow> compare_variants(const PromptTemplate& baseline, const std::vector<PromptTemplate>& variants,
                                         const CompareContext& ctx) {
  if (!ctx.calib || !ctx.test) fail(ErrorKind::InvalidArgument, "compare_variants needs calibration and test sets");
  std::vector<const PromptTemplate*> templates{&baseline};
  for (const auto& v : variants) templates.push_back(&v);

  const auto calib_sorted = sorted_by_id(*ctx.calib);
  const auto test_sorted = sorted_by_id(*ctx.test);
  std::vector<EvalItem> items;
  for (const auto* t : templates) {
    for (const auto* s : calib_sorted) items.push_back({t, s, Split::Calib});
    for (const auto* s : test_sorted) items.push_back({t, s, Split::Test});
  }
  const auto result = evaluate(items, ctx.eval, false);
  const LabelDistribution prior = ctx.target_prior.value_or(LabelDistribution::uniform());

  std::vector<VariantRow> rows;
  std::size_t base = 0;
  for (std::size_t t = 0; t < templates.size(); ++t) {
    VariantRow row;
    row.prompt_id = templates[t]->id;
    row.baseline = t == 0;
    row.tag = row.baseline ? "baseline" : templates[t]->variant_tag.value_or(templates[t]->id);
    row.requested = test_sorted.size();

    std::vector<LabelDistribution> calib_raws;
    std::vector<RatingLabel> calib_golds;
    std::vector<const PredictionRecord*> test_recs;
    std::vector<RatingLabel> test_golds;
    const std::size_t n_total = calib_sorted.size() + test_sorted.size();
    for (std::size_t k = 0; k < n_total; ++k) {
      const auto& item = items[base + k];
      if (const auto& err = result.errors[base + k]) {
        row.incomplete = true;
        if (row.error.empty()) row.error = annotate(*err, item_context(item)).what();
        continue;
      }
      const auto& rec = *result.records[base + k];
      if (item.split == Split::Calib) {
        calib_raws.push_back(rec.raw);
        calib_golds.push_back(item.sample->gold);
      } else {
        test_recs.push_back(&rec);
        test_golds.push_back(item.sample->gold);
      }
    }
    base += n_total;
    row.evaluated = test_recs.size();

    if (calib_raws.empty() || test_recs.empty()) {
      row.failed = true;
      if (row.error.empty()) row.error = "no scorable samples";
    } else {
      try {
        const auto fit = learn_lambda(calib_raws, calib_golds, prior);
        std::vector<LabelDistribution> dists;
        for (const auto* r : test_recs) dists.push_back(calibrate(r->raw, fit.lambda));
        row.lambda = fit.lambda;
        row.metrics = prompt_metrics(dists, test_golds, ctx.entropy_base);
      } catch (const Error& e) {
        row.failed = true;
        row.error = e.what();
      }
    }
    rows.push_back(std::move(row));
  }

  std::stable_sort(rows.begin(), rows.end(), [](const VariantRow& a, const VariantRow& b) {
    if (a.failed != b.failed) return !a.failed;
    if (a.failed) return false;
    return a.metrics->accuracy > b.metrics->accuracy;
  });
  return rows;
}

}  // namespace causal_probe
