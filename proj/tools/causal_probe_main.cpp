#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "causal_probe/backend.hpp"
#include "causal_probe/config.hpp"
#include "causal_probe/dataset_io.hpp"
#include "causal_probe/error.hpp"
#include "causal_probe/perturb.hpp"
#include "causal_probe/pipeline.hpp"
#include "causal_probe/prompt_pack.hpp"
#include "causal_probe/replay_backend.hpp"
#include "causal_probe/report.hpp"
#include "causal_probe/store.hpp"

namespace cp = causal_probe;
namespace fs = std::filesystem;

namespace {

struct RunFlags {
  std::string config;
  bool force = false;
  bool no_cache = false;
  std::string format = "both";
  std::string pos_lexicon, neg_lexicon;
  std::string output;
  std::string partition_on;
  std::string entropy_base;
  std::optional<std::size_t> calib_size;
  std::optional<std::uint64_t> seed;
};

struct StoreFlags {
  std::string store;
  std::string partition_on;
  std::string oep_means;
  std::string entropy_base;
};

cp::RunConfig load_config(const RunFlags& f) {
  auto cfg = cp::load_run_config(f.config);
  if (!f.pos_lexicon.empty()) cfg.pos_lexicon = fs::path(f.pos_lexicon);
  if (!f.neg_lexicon.empty()) cfg.neg_lexicon = fs::path(f.neg_lexicon);
  if (!f.output.empty()) cfg.output_dir = f.output;
  if (!f.partition_on.empty()) cfg.partition_on = cp::parse_distribution_source(f.partition_on);
  if (!f.entropy_base.empty()) cfg.entropy_base = cp::parse_entropy_base(f.entropy_base);
  if (f.calib_size) cfg.calib_size = *f.calib_size;
  if (f.seed) cfg.seed = *f.seed;
  cfg.validate();
  return cfg;
}

cp::ReportSettings settings_for(const cp::ResultsStore& store, const StoreFlags& f) {
  auto s = store.manifest.settings;
  if (!f.partition_on.empty()) s.source = cp::parse_distribution_source(f.partition_on);
  if (!f.entropy_base.empty()) s.entropy_base = cp::parse_entropy_base(f.entropy_base);
  if (!f.oep_means.empty()) {
    if (f.oep_means != "global" && f.oep_means != "local") {
      cp::fail(cp::ErrorKind::InvalidArgument, "--oep-means must be global or local");
    }
    s.oep_global_means = f.oep_means == "global";
  }
  return s;
}

void add_store_flags(CLI::App* cmd, StoreFlags& f) {
  cmd->add_option("--store", f.store, "Results directory written by `run`")->required();
  cmd->add_option("--partition-on", f.partition_on, "calibrated or raw");
  cmd->add_option("--entropy-base", f.entropy_base, "bits or nat");
}

void print_metrics(const cp::Report& rep) { std::cout << cp::metrics_csv(rep); }

int cmd_ingest(const std::string& dataset, std::uint64_t seed, std::size_t size, const std::string& out) {
  const auto ds = cp::ingest(fs::path(dataset), seed, size);
  if (out.empty() || out == "-") {
    std::cout << cp::dataset_to_jsonl(ds);
  } else {
    cp::write_dataset_jsonl(ds, out);
    std::cerr << "wrote " << ds.samples.size() << " samples to " << out << "\n";
  }
  return 0;
}

int cmd_run(const RunFlags& f) {
  const auto cfg = load_config(f);
  cp::RunOptions opts;
  opts.force = f.force;
  opts.use_cache = !f.no_cache;
  const auto before = cp::backend_call_count();
  const auto store = cp::run(cfg, opts);
  const auto rep = cp::build_report(store);
  cp::write_report(rep, cfg.output_dir, cp::parse_report_format(f.format));
  std::cerr << "backend calls: " << (cp::backend_call_count() - before) << ", records: " << store.records.size()
            << ", output: " << cfg.output_dir.string() << "\n";
  print_metrics(rep);
  return 0;
}

int cmd_calibrate(const std::string& dir, const std::vector<double>& prior_in, bool write) {
  auto store = cp::ResultsStore::load(dir);
  const auto prior = prior_in.empty() ? cp::LabelDistribution::uniform() : cp::validate_distribution(prior_in);
  std::map<std::string, cp::RatingLabel> gold;
  for (const auto& s : store.samples) gold.emplace(s.sample.id, s.sample.gold);
  std::cout << "prompt_id,lambda1,lambda2,lambda3,lambda4,lambda5,objective,uniform_objective,iterations\n";
  for (const auto& p : store.manifest.prompts) {
    const auto recs = store.records_for(p.id, cp::Split::Calib);
    if (recs.empty()) continue;
    std::vector<cp::LabelDistribution> raws;
    std::vector<cp::RatingLabel> golds;
    for (const auto& r : recs) {
      raws.push_back(r.raw);
      golds.push_back(gold.at(r.sample_id));
    }
    const auto fit = cp::learn_lambda(raws, golds, prior);
    std::cout << p.id;
    for (double l : fit.lambda.lambda()) std::cout << "," << cp::format_fixed4(l);
    std::cout << "," << cp::format_fixed4(fit.objective) << "," << cp::format_fixed4(fit.uniform_objective) << ","
              << fit.iterations << "\n";
    store.calibration[p.id] = fit;
    for (auto& r : store.records) {
      if (r.record.prompt_id == p.id) r.record.calibrated = cp::calibrate(r.record.raw, fit.lambda);
    }
  }
  if (write) {
    store.save(dir);
    cp::write_report(cp::build_report(store), dir);
  }
  return 0;
}

int cmd_metrics(const StoreFlags& f) {
  const auto store = cp::ResultsStore::load(f.store);
  print_metrics(cp::build_report(store, settings_for(store, f)));
  return 0;
}

int cmd_subsets(const StoreFlags& f, std::size_t dump_examples) {
  const auto store = cp::ResultsStore::load(f.store);
  const auto rep = cp::build_report(store, settings_for(store, f));
  std::cout << cp::subsets_csv(rep);
  for (const auto& note : rep.notes) std::cerr << "note: " << note << "\n";
  if (dump_examples > 0 && !rep.diversity.empty()) {
    std::map<std::string, const cp::ReviewSample*> text;
    for (const auto& s : store.samples) text.emplace(s.sample.id, &s.sample);
    auto rows = rep.diversity;
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.diversity < b.diversity; });
    auto dump = [&](const char* title, auto begin, auto end) {
      std::cout << "\n# " << title << "\n";
      for (auto it = begin; it != end; ++it) {
        std::cout << it->sample_id << " gold=" << it->gold.value() << " argmax=";
        for (std::size_t i = 0; i < it->argmaxes.size(); ++i) {
          std::cout << (i ? "/" : "") << it->argmaxes[i].value();
        }
        std::cout << " diversity=" << cp::format_fixed4(it->diversity) << " " << it->cell << "\n  "
                  << text.at(it->sample_id)->text << "\n";
      }
    };
    const auto n = std::min(dump_examples, rows.size());
    dump("highest agreement", rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n));
    dump("highest diversity", rows.rbegin(), rows.rbegin() + static_cast<std::ptrdiff_t>(n));
  }
  return 0;
}

int cmd_report(const std::string& dir, const std::string& out, const std::string& format) {
  const auto store = cp::ResultsStore::load(dir);
  const auto rep = cp::build_report(store);
  cp::write_report(rep, out.empty() ? fs::path(dir) : fs::path(out), cp::parse_report_format(format));
  for (const auto& note : rep.notes) std::cerr << "note: " << note << "\n";
  return 0;
}

struct PerturbFlags {
  std::string pack = std::string(cp::kBuiltinYelpPack);
  std::string op = "sr";
  double alpha = 0.1;
  std::uint64_t seed = 0;
  int count = 10;
  std::string synonyms;
  std::vector<std::string> prompts;
  std::string out;
  std::string compare_config;
};

int cmd_perturb(const PerturbFlags& f) {
  const auto pack = cp::resolve_prompt_pack(f.pack);
  cp::PerturbationSpec spec{cp::parse_perturbation_op(f.op), f.alpha, f.seed, f.count};
  spec.validate();
  std::optional<cp::SynonymTable> syn;
  if (!f.synonyms.empty()) syn = cp::SynonymTable::load(f.synonyms);

  std::vector<const cp::PromptTemplate*> bases;
  if (f.prompts.empty()) {
    for (const auto& p : pack.prompts) bases.push_back(&p);
  } else {
    for (const auto& id : f.prompts) {
      const auto* p = pack.find(id);
      if (!p) cp::fail(cp::ErrorKind::InvalidArgument, "prompt '" + id + "' is not in pack '" + pack.name + "'");
      bases.push_back(p);
    }
  }

  cp::PromptPack out;
  out.name = pack.name + "~" + std::string(cp::to_code(spec.op));
  std::vector<std::pair<const cp::PromptTemplate*, std::vector<cp::PromptTemplate>>> groups;
  for (const auto* b : bases) {
    auto variants = cp::perturb_prompt(*b, spec, syn ? &*syn : nullptr);
    out.prompts.insert(out.prompts.end(), variants.begin(), variants.end());
    groups.emplace_back(b, std::move(variants));
  }

  const auto toml = cp::prompt_pack_to_toml(out);
  if (f.out.empty()) {
    if (f.compare_config.empty()) std::cout << toml;
  } else {
    cp::write_file_atomic(f.out, toml);
    std::cerr << "wrote " << out.prompts.size() << " variants to " << f.out << "\n";
  }
  if (f.compare_config.empty()) return 0;

  const auto cfg = cp::load_run_config(f.compare_config);
  const auto test_pool = cp::load_dataset_jsonl(cfg.dataset);
  std::optional<cp::Dataset> calib_pool;
  if (cfg.calib_dataset) calib_pool = cp::load_dataset_jsonl(*cfg.calib_dataset);
  const auto splits =
      cp::make_splits(test_pool, calib_pool ? &*calib_pool : nullptr, cfg.seed, cfg.calib_size, cfg.test_size);
  auto backend = cp::make_backend(cfg.backend);
  cp::ResponseCache cache(cfg.cache_dir);

  cp::CompareContext ctx;
  ctx.calib = &splits.calib;
  ctx.test = &splits.test;
  ctx.eval.backend = backend.get();
  ctx.eval.cache = &cache;
  ctx.eval.forms = cfg.surface_forms.value_or(cp::SurfaceFormMap::defaults());
  ctx.eval.model = cfg.backend.model;
  ctx.eval.top_logprobs = cfg.backend.top_logprobs;
  ctx.eval.concurrency = cfg.backend.concurrency;
  ctx.eval.on_unscorable = cfg.on_unscorable;
  ctx.target_prior = cfg.target_prior;
  ctx.entropy_base = cfg.entropy_base;

  std::cout << "prompt_id,tag,accuracy,weighted_f1,evaluated,requested,status\n";
  for (const auto& [base, variants] : groups) {
    for (const auto& row : cp::compare_variants(*base, variants, ctx)) {
      std::cout << row.prompt_id << "," << row.tag << ","
                << (row.metrics ? cp::format_fixed4(row.metrics->accuracy) : "") << ","
                << (row.metrics ? cp::format_fixed4(row.metrics->weighted_f1) : "") << "," << row.evaluated << ","
                << row.requested << "," << (row.failed ? "failed" : row.incomplete ? "incomplete" : "ok") << "\n";
      if (!row.error.empty()) std::cerr << row.prompt_id << ": " << row.error << "\n";
    }
  }
  return 0;
}

// Checks that a replay fixture answers every request a run would make.
int cmd_fixtures_verify(const std::string& config) {
  const auto cfg = cp::load_run_config(config);
  if (cfg.backend.kind != "replay") cp::fail(cp::ErrorKind::ConfigError, "fixtures verify needs a replay backend");
  const auto pack = cp::resolve_prompt_pack(cfg.prompt_pack);
  const auto test_pool = cp::load_dataset_jsonl(cfg.dataset);
  std::optional<cp::Dataset> calib_pool;
  if (cfg.calib_dataset) calib_pool = cp::load_dataset_jsonl(*cfg.calib_dataset);
  const auto splits =
      cp::make_splits(test_pool, calib_pool ? &*calib_pool : nullptr, cfg.seed, cfg.calib_size, cfg.test_size);
  const auto replay = cp::ReplayBackend::from_file(cfg.backend.fixture);

  cp::EvaluationContext ctx;
  ctx.model = cfg.backend.model;
  ctx.top_logprobs = cfg.backend.top_logprobs;
  std::size_t total = 0, missing = 0;
  for (const auto& p : pack.prompts) {
    for (const auto* split : {&splits.calib, &splits.test}) {
      for (const auto& s : split->samples) {
        ++total;
        if (!replay.contains(cp::make_request(p, s, ctx))) {
          ++missing;
          std::cout << "missing: prompt " << p.id << ", sample " << s.id << "\n";
        }
      }
    }
  }
  std::cout << (total - missing) << "/" << total << " requests covered by " << cfg.backend.fixture.string() << "\n";
  if (missing > 0) cp::fail(cp::ErrorKind::ReplayMiss, std::to_string(missing) + " requests have no recording");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate causal prompt packs against completion backends"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cp::kToolVersion));

  std::string dataset, out;
  std::uint64_t seed = 0;
  std::size_t size = 0;
  auto* ingest = app.add_subcommand("ingest", "Balanced downsample of a JSON-Lines dataset");
  ingest->add_option("--dataset", dataset, "Input JSON-Lines file")->required();
  ingest->add_option("--seed", seed, "Sampling seed");
  ingest->add_option("--size", size, "Target size, a multiple of 5")->required();
  ingest->add_option("--out", out, "Output file (default stdout)");

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Evaluate, calibrate and write the results store and reports");
  run->add_option("--config", run_flags.config, "Run config (TOML)")->required();
  run->add_flag("--force", run_flags.force, "Overwrite a store built from other inputs");
  run->add_flag("--no-cache", run_flags.no_cache, "Bypass the response cache");
  run->add_option("--format", run_flags.format, "csv, json or both");
  run->add_option("--pos-lexicon", run_flags.pos_lexicon, "Positive opinion word list");
  run->add_option("--neg-lexicon", run_flags.neg_lexicon, "Negative opinion word list");
  run->add_option("--output", run_flags.output, "Output directory");
  run->add_option("--partition-on", run_flags.partition_on, "calibrated or raw");
  run->add_option("--entropy-base", run_flags.entropy_base, "bits or nat");
  run->add_option("--calib-size", run_flags.calib_size, "Calibration samples, a multiple of 5");
  run->add_option("--seed", run_flags.seed, "Override the config seed");

  std::string calib_store;
  std::vector<double> prior;
  bool calib_write = false;
  auto* calibrate = app.add_subcommand("calibrate", "Refit lambda per prompt from a store's calibration split");
  calibrate->add_option("--store", calib_store, "Results directory")->required();
  calibrate->add_option("--target-prior", prior, "Five label probabilities")->delimiter(',')->expected(5);
  calibrate->add_flag("--write", calib_write, "Save the refit lambdas and rewrite the reports");

  StoreFlags metrics_flags;
  auto* metrics = app.add_subcommand("metrics", "Per-prompt accuracy, weighted F1 and entropy");
  add_store_flags(metrics, metrics_flags);

  StoreFlags subsets_flags;
  std::size_t dump_examples = 0;
  auto* subsets = app.add_subcommand("subsets", "Agreement partition and subset statistics");
  add_store_flags(subsets, subsets_flags);
  subsets->add_option("--oep-means", subsets_flags.oep_means, "global or local");
  subsets->add_option("--dump-examples", dump_examples, "Print the N most and least agreed-on samples");

  PerturbFlags pf;
  auto* perturb = app.add_subcommand("perturb", "EDA-style prompt variants");
  perturb->add_option("--pack", pf.pack, "Prompt pack file or built-in name");
  perturb->add_option("--op", pf.op, "sr, ri, rs or rd");
  perturb->add_option("--alpha", pf.alpha, "Strength in (0, 1]");
  perturb->add_option("--seed", pf.seed, "Seed");
  perturb->add_option("--count", pf.count, "Variants per prompt");
  perturb->add_option("--synonyms", pf.synonyms, "Synonym table (`word: a, b`)");
  perturb->add_option("--prompt", pf.prompts, "Only these prompt ids");
  perturb->add_option("--out", pf.out, "Write the variant pack here");
  perturb->add_option("--compare", pf.compare_config, "Run config; evaluate variants against their baseline");

  std::string report_store, report_out, report_format = "both";
  auto* report = app.add_subcommand("report", "Write report files from a results store");
  report->add_option("--store", report_store, "Results directory")->required();
  report->add_option("--out", report_out, "Output directory (default: the store)");
  report->add_option("--format", report_format, "csv, json or both");

  std::string verify_config;
  auto* fixtures = app.add_subcommand("fixtures", "Fixture maintenance");
  fixtures->require_subcommand(1);
  auto* verify = fixtures->add_subcommand("verify", "Check a replay fixture covers a run config");
  verify->add_option("--config", verify_config, "Run config (TOML)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*ingest) return cmd_ingest(dataset, seed, size, out);
    if (*run) return cmd_run(run_flags);
    if (*calibrate) return cmd_calibrate(calib_store, prior, calib_write);
    if (*metrics) return cmd_metrics(metrics_flags);
    if (*subsets) return cmd_subsets(subsets_flags, dump_examples);
    if (*perturb) return cmd_perturb(pf);
    if (*report) return cmd_report(report_store, report_out, report_format);
    if (*verify) return cmd_fixtures_verify(verify_config);
  } catch (const cp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cp::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
