#include "causal_probe/store.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "causal_probe/error.hpp"
#include "json.hpp"

namespace causal_probe {
namespace fs = std::filesystem;
namespace {

using nlohmann::json;

json dist_json(const LabelDistribution& d) { return json(d.probs()); }

LabelDistribution dist_from(const json& j) { return validate_distribution(j.get<std::vector<double>>()); }

json prompt_json(const PromptTemplate& p) {
  return {{"id", p.id},
          {"causal_tag", to_string(p.causal_tag)},
          {"variant_tag", p.variant_tag ? json(*p.variant_tag) : json(nullptr)},
          {"template", p.template_text}};
}

PromptTemplate prompt_from(const json& j) {
  PromptTemplate p;
  p.id = j.at("id").get<std::string>();
  p.causal_tag = parse_causal_tag(j.at("causal_tag").get<std::string>());
  p.template_text = j.at("template").get<std::string>();
  if (!j.at("variant_tag").is_null()) p.variant_tag = j["variant_tag"].get<std::string>();
  return p;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IncompleteStore, "missing store file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename F>
void for_each_line(const fs::path& path, F&& f) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      f(json::parse(line));
    } catch (const json::exception& e) {
      fail(ErrorKind::ParseError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

json manifest_json(const StoreManifest& m) {
  json prompts = json::array();
  for (const auto& p : m.prompts) prompts.push_back(prompt_json(p));
  json failures = json::array();
  for (const auto& f : m.failures) {
    failures.push_back({{"split", to_string(f.split)}, {"prompt_id", f.prompt_id}, {"sample_id", f.sample_id},
                        {"error", f.error}});
  }
  const auto& s = m.settings;
  return {
      {"tool_version", m.tool_version},
      {"config_hash", m.config_hash},
      {"pack_hash", m.pack_hash},
      {"dataset_hash", m.dataset_hash},
      {"pack_name", m.pack_name},
      {"prompts", prompts},
      {"settings",
       {{"entropy_base", s.entropy_base == EntropyBase::Bits ? "bits" : "nat"},
        {"source", to_string(s.source)},
        {"oep_means", s.oep_global_means ? "global" : "local"},
        {"seed", s.seed},
        {"random_subset_size", s.random_subset_size},
        {"decile_fraction", s.decile_fraction},
        {"partition_prompts", s.partition_prompts}}},
      {"failures", failures},
      {"notes", m.notes},
  };
}

StoreManifest manifest_from(const json& j) {
  StoreManifest m;
  m.tool_version = j.at("tool_version").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.pack_hash = j.at("pack_hash").get<std::string>();
  m.dataset_hash = j.at("dataset_hash").get<std::string>();
  m.pack_name = j.at("pack_name").get<std::string>();
  for (const auto& p : j.at("prompts")) m.prompts.push_back(prompt_from(p));
  const auto& s = j.at("settings");
  m.settings.entropy_base = s.at("entropy_base").get<std::string>() == "bits" ? EntropyBase::Bits : EntropyBase::Nats;
  m.settings.source =
      s.at("source").get<std::string>() == "raw" ? DistributionSource::Raw : DistributionSource::Calibrated;
  m.settings.oep_global_means = s.at("oep_means").get<std::string>() == "global";
  m.settings.seed = s.at("seed").get<std::uint64_t>();
  m.settings.random_subset_size = s.at("random_subset_size").get<std::size_t>();
  m.settings.decile_fraction = s.at("decile_fraction").get<double>();
  m.settings.partition_prompts = s.at("partition_prompts").get<std::vector<std::string>>();
  for (const auto& f : j.at("failures")) {
    m.failures.push_back({parse_split(f.at("split").get<std::string>()), f.at("prompt_id").get<std::string>(),
                          f.at("sample_id").get<std::string>(), f.at("error").get<std::string>()});
  }
  m.notes = j.at("notes").get<std::vector<std::string>>();
  return m;
}

std::atomic<std::uint64_t> g_tmp_counter{0};

}  // namespace

std::string_view to_string(Split split) noexcept { return split == Split::Calib ? "calib" : "test"; }

Split parse_split(std::string_view text) {
  if (text == "calib") return Split::Calib;
  if (text == "test") return Split::Test;
  fail(ErrorKind::ParseError, "unknown split '" + std::string(text) + "'");
}

bool same_inputs(const StoreManifest& a, const StoreManifest& b) noexcept {
  return a.config_hash == b.config_hash && a.pack_hash == b.pack_hash && a.dataset_hash == b.dataset_hash;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(g_tmp_counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot write " + tmp.string());
    out << content;
    if (!out) fail(ErrorKind::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::IoError, "cannot publish " + path.string());
  }
}

void ResultsStore::save(const fs::path& dir) const {
  std::string samples_out;
  for (const auto& s : samples) {
    json j = {{"id", s.sample.id},
              {"text", s.sample.text},
              {"label", s.sample.gold.value()},
              {"split", to_string(s.split)},
              {"n_words", whitespace_word_count(s.sample.text)}};
    if (s.counts) {
      j["w_pos"] = s.counts->w_pos;
      j["w_neg"] = s.counts->w_neg;
      j["n_tokens"] = s.counts->n_tokens;
    }
    samples_out += j.dump() + "\n";
  }

  std::string records_out;
  for (const auto& r : records) {
    json topk = json::array();
    for (const auto& t : r.record.topk) topk.push_back({{"token", t.token}, {"logprob", t.logprob}});
    records_out += json{{"split", to_string(r.split)},
                        {"prompt_id", r.record.prompt_id},
                        {"sample_id", r.record.sample_id},
                        {"topk", topk},
                        {"raw", dist_json(r.record.raw)},
                        {"calibrated", r.record.calibrated ? dist_json(*r.record.calibrated) : json(nullptr)}}
                       .dump() +
                   "\n";
  }

  json calib = json::object();
  for (const auto& [id, fit] : calibration) {
    calib[id] = {{"lambda", fit.lambda.lambda()},
                 {"objective", fit.objective},
                 {"uniform_objective", fit.uniform_objective},
                 {"iterations", fit.iterations},
                 {"best_iteration", fit.best_iteration}};
  }

  write_file_atomic(dir / "samples.jsonl", samples_out);
  write_file_atomic(dir / "records.jsonl", records_out);
  write_file_atomic(dir / "calibration.json", calib.dump(2) + "\n");
  // Manifest last: its presence marks a complete store.
  write_file_atomic(dir / "manifest.json", manifest_json(manifest).dump(2) + "\n");
}

std::optional<StoreManifest> ResultsStore::read_manifest(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_regular_file(dir / "manifest.json", ec)) return std::nullopt;
  try {
    return manifest_from(json::parse(read_file(dir / "manifest.json")));
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, (dir / "manifest.json").string() + ": " + e.what());
  }
}

ResultsStore ResultsStore::load(const fs::path& dir) {
  auto manifest = read_manifest(dir);
  if (!manifest) fail(ErrorKind::IncompleteStore, "no manifest.json in " + dir.string());
  ResultsStore store;
  store.manifest = std::move(*manifest);

  for_each_line(dir / "samples.jsonl", [&](const json& j) {
    StoredSample s;
    s.sample = {j.at("id").get<std::string>(), j.at("text").get<std::string>(), RatingLabel(j.at("label").get<int>())};
    s.split = parse_split(j.at("split").get<std::string>());
    if (j.contains("w_pos")) {
      s.counts = OpinionCounts{s.sample.id, j.at("w_pos").get<std::uint64_t>(), j.at("w_neg").get<std::uint64_t>(),
                               j.at("n_tokens").get<std::uint64_t>()};
    }
    store.samples.push_back(std::move(s));
  });

  for_each_line(dir / "records.jsonl", [&](const json& j) {
    StoredRecord r;
    r.split = parse_split(j.at("split").get<std::string>());
    r.record.prompt_id = j.at("prompt_id").get<std::string>();
    r.record.sample_id = j.at("sample_id").get<std::string>();
    for (const auto& t : j.at("topk")) {
      r.record.topk.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
    }
    r.record.raw = dist_from(j.at("raw"));
    if (!j.at("calibrated").is_null()) r.record.calibrated = dist_from(j["calibrated"]);
    store.records.push_back(std::move(r));
  });

  try {
    const auto calib = json::parse(read_file(dir / "calibration.json"));
    for (const auto& [id, c] : calib.items()) {
      LambdaFit fit;
      fit.lambda = CalibrationVector::from_weights(c.at("lambda").get<std::vector<double>>());
      fit.objective = c.at("objective").get<double>();
      fit.uniform_objective = c.at("uniform_objective").get<double>();
      fit.iterations = c.at("iterations").get<int>();
      fit.best_iteration = c.at("best_iteration").get<int>();
      store.calibration.emplace(id, fit);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, (dir / "calibration.json").string() + ": " + e.what());
  }
  return store;
}

std::vector<PredictionRecord> ResultsStore::records_for(std::string_view prompt_id, Split split) const {
  std::vector<PredictionRecord> out;
  for (const auto& r : records) {
    if (r.split == split && r.record.prompt_id == prompt_id) out.push_back(r.record);
  }
  return out;
}

}  // namespace causal_probe
