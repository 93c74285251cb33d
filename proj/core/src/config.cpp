#include "causal_probe/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "causal_probe/error.hpp"
#include "toml_lite.hpp"

namespace causal_probe {
namespace fs = std::filesystem;
namespace {

using nlohmann::json;

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::ConfigError, std::string("config key '") + key + "' has the wrong type");
  }
}

std::size_t get_size(const json& j, const char* key, std::size_t fallback) {
  const auto v = get_or<long long>(j, key, static_cast<long long>(fallback));
  if (v < 0) fail(ErrorKind::ConfigError, std::string("config key '") + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

const std::set<std::string> kTopKeys = {
    "dataset",    "calib_dataset", "prompt_pack",        "cache_dir",       "output_dir",   "calib_size",
    "test_size",  "seed",          "entropy_base",       "partition_on",    "oep_means",    "partition_prompts",
    "random_subset_size",          "decile_fraction",    "on_unscorable",   "backend",      "lexicon",
    "surface_forms",               "calibration"};

}  // namespace

EntropyBase parse_entropy_base(std::string_view text) {
  if (text == "bits" || text == "bit" || text == "2") return EntropyBase::Bits;
  if (text == "nat" || text == "nats" || text == "e") return EntropyBase::Nats;
  fail(ErrorKind::ConfigError, "entropy base must be 'bits' or 'nat', got '" + std::string(text) + "'");
}

std::string_view to_string(EntropyBase base) noexcept { return base == EntropyBase::Bits ? "bits" : "nat"; }

DistributionSource parse_distribution_source(std::string_view text) {
  if (text == "calibrated") return DistributionSource::Calibrated;
  if (text == "raw") return DistributionSource::Raw;
  fail(ErrorKind::ConfigError, "expected 'calibrated' or 'raw', got '" + std::string(text) + "'");
}

void RunConfig::validate() const {
  if (dataset.empty()) fail(ErrorKind::ConfigError, "config needs a dataset");
  if (backend.kind != "replay" && backend.kind != "openai") {
    fail(ErrorKind::ConfigError, "backend.kind must be 'replay' or 'openai'");
  }
  if (backend.kind == "replay" && backend.fixture.empty()) {
    fail(ErrorKind::ConfigError, "replay backend needs backend.fixture");
  }
  if (backend.top_logprobs < 1 || backend.top_logprobs > 20) {
    fail(ErrorKind::ConfigError, "backend.top_logprobs must be in [1,20]");
  }
  if (backend.concurrency < 1) fail(ErrorKind::ConfigError, "backend.concurrency must be positive");
  if (calib_size == 0 || calib_size % kNumLabels != 0) {
    fail(ErrorKind::ConfigError, "calib_size must be a positive multiple of 5");
  }
  if (test_size && (*test_size == 0 || *test_size % kNumLabels != 0)) {
    fail(ErrorKind::ConfigError, "test_size must be a positive multiple of 5");
  }
  if (!(decile_fraction > 0.0 && decile_fraction <= 0.5)) {
    fail(ErrorKind::ConfigError, "decile_fraction must be in (0, 0.5]");
  }
  if (pos_lexicon.has_value() != neg_lexicon.has_value()) {
    fail(ErrorKind::ConfigError, "positive and negative lexicons must be given together");
  }
}

RunConfig parse_run_config(std::string_view toml_text, const fs::path& base_dir) {
  const auto doc = toml::parse(toml_text);
  for (const auto& [key, value] : doc.items()) {
    if (!kTopKeys.contains(key)) fail(ErrorKind::ConfigError, "unknown config key '" + key + "'");
  }

  RunConfig cfg;
  if (doc.contains("dataset")) cfg.dataset = resolve(base_dir, get_or<std::string>(doc, "dataset", ""));
  if (doc.contains("calib_dataset")) cfg.calib_dataset = resolve(base_dir, get_or<std::string>(doc, "calib_dataset", ""));
  if (doc.contains("prompt_pack")) {
    const auto ref = get_or<std::string>(doc, "prompt_pack", "");
    const auto as_path = resolve(base_dir, ref);
    std::error_code ec;
    cfg.prompt_pack = fs::is_regular_file(as_path, ec) ? as_path.string() : ref;
  }
  cfg.cache_dir = resolve(base_dir, get_or<std::string>(doc, "cache_dir", "cache"));
  cfg.output_dir = resolve(base_dir, get_or<std::string>(doc, "output_dir", "out"));
  cfg.calib_size = get_size(doc, "calib_size", cfg.calib_size);
  if (doc.contains("test_size")) cfg.test_size = get_size(doc, "test_size", 0);
  cfg.seed = static_cast<std::uint64_t>(get_or<long long>(doc, "seed", 0));
  cfg.entropy_base = parse_entropy_base(get_or<std::string>(doc, "entropy_base", "bits"));
  cfg.partition_on = parse_distribution_source(get_or<std::string>(doc, "partition_on", "calibrated"));
  const auto oep_means = get_or<std::string>(doc, "oep_means", "global");
  if (oep_means != "global" && oep_means != "local") fail(ErrorKind::ConfigError, "oep_means must be global|local");
  cfg.oep_global_means = oep_means == "global";
  cfg.partition_prompts = get_or<std::vector<std::string>>(doc, "partition_prompts", {});
  cfg.random_subset_size = get_size(doc, "random_subset_size", cfg.random_subset_size);
  cfg.decile_fraction = get_or<double>(doc, "decile_fraction", cfg.decile_fraction);
  const auto unscorable = get_or<std::string>(doc, "on_unscorable", "error");
  if (unscorable != "error" && unscorable != "skip") fail(ErrorKind::ConfigError, "on_unscorable must be error|skip");
  cfg.on_unscorable = unscorable == "skip" ? UnscorablePolicy::Skip : UnscorablePolicy::Error;

  if (doc.contains("backend")) {
    const auto& b = doc["backend"];
    cfg.backend.kind = get_or<std::string>(b, "kind", cfg.backend.kind);
    if (b.contains("fixture")) cfg.backend.fixture = resolve(base_dir, get_or<std::string>(b, "fixture", ""));
    cfg.backend.model = get_or<std::string>(b, "model", cfg.backend.model);
    cfg.backend.base_url = get_or<std::string>(b, "base_url", "");
    cfg.backend.top_logprobs = get_or<int>(b, "top_logprobs", cfg.backend.top_logprobs);
    cfg.backend.concurrency = get_or<int>(b, "concurrency", cfg.backend.concurrency);
    cfg.backend.requests_per_second = get_or<double>(b, "requests_per_second", 0.0);
    cfg.backend.timeout_seconds = get_or<double>(b, "timeout_seconds", cfg.backend.timeout_seconds);
  }
  if (doc.contains("lexicon")) {
    const auto& l = doc["lexicon"];
    if (l.contains("positive")) cfg.pos_lexicon = resolve(base_dir, get_or<std::string>(l, "positive", ""));
    if (l.contains("negative")) cfg.neg_lexicon = resolve(base_dir, get_or<std::string>(l, "negative", ""));
  }
  if (doc.contains("surface_forms")) {
    SurfaceFormMap::Forms forms;
    const auto& sf = doc["surface_forms"];
    for (std::size_t i = 0; i < kNumLabels; ++i) {
      const auto key = std::to_string(i + 1);
      if (!sf.contains(key)) fail(ErrorKind::ConfigError, "surface_forms needs an entry for label " + key);
      for (const auto& f : get_or<std::vector<std::string>>(sf, key.c_str(), {})) forms[i].insert(f);
    }
    cfg.surface_forms = SurfaceFormMap(forms);
  }
  if (doc.contains("calibration")) {
    const auto& c = doc["calibration"];
    if (c.contains("target_prior")) {
      const auto prior = get_or<std::vector<double>>(c, "target_prior", {});
      cfg.target_prior = validate_distribution(prior);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ConfigError, "cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace causal_probe
