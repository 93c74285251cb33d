#include "causal_probe/cache.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "causal_probe/error.hpp"
#include "causal_probe/hash.hpp"
#include "json.hpp"

namespace causal_probe {
namespace fs = std::filesystem;
namespace {

nlohmann::json response_json(const CompletionResponse& resp) {
  nlohmann::json topk = nlohmann::json::array();
  for (const auto& t : resp.topk) topk.push_back({{"logprob", t.logprob}, {"token", t.token}});
  return {{"backend_id", resp.backend_id}, {"topk", std::move(topk)}};
}

std::string checksum_of(const nlohmann::json& request, const nlohmann::json& response) {
  return sha256_hex(nlohmann::json{{"request", request}, {"response", response}}.dump());
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::atomic<std::uint64_t> g_tmp_counter{0};

}  // namespace

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) fail(ErrorKind::IoError, "cache directory unusable: " + dir_.string());
}

fs::path ResponseCache::entry_path(const CompletionRequest& req) const {
  const auto digest = request_digest(req);
  return dir_ / digest.substr(0, 2) / (digest + ".json");
}

ResponseCache::Lookup ResponseCache::lookup(const CompletionRequest& req) const {
  const auto path = entry_path(req);
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  in.close();

  try {
    const auto doc = nlohmann::json::parse(buf.str());
    const auto& request = doc.at("request");
    const auto& response = doc.at("response");
    if (doc.at("checksum").get<std::string>() != checksum_of(request, response)) {
      throw std::runtime_error("checksum mismatch");
    }
    if (request.dump() != canonical_request_json(req)) throw std::runtime_error("request mismatch");
    CompletionResponse resp;
    resp.backend_id = response.at("backend_id").get<std::string>();
    for (const auto& t : response.at("topk")) {
      resp.topk.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
    }
    resp.validate();
    resp.cached = true;
    return {LookupStatus::Hit, std::move(resp)};
  } catch (const std::exception&) {
    std::error_code ec;
    fs::rename(path, fs::path(path).concat(".corrupt"), ec);
    quarantined_.fetch_add(1);
    return {LookupStatus::Corrupt, std::nullopt};
  }
}

void ResponseCache::store(const CompletionRequest& req, const CompletionResponse& resp) const {
  const auto path = entry_path(req);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);

  const auto request = nlohmann::json::parse(canonical_request_json(req));
  const auto response = response_json(resp);
  nlohmann::json doc = {
      {"request", request},
      {"response", response},
      {"checksum", checksum_of(request, response)},
      {"timestamp", utc_timestamp()},
  };

  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << ::getpid() << "." << g_tmp_counter.fetch_add(1);
  const auto tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot write cache entry " + tmp.string());
    out << doc.dump(2) << '\n';
    if (!out) fail(ErrorKind::IoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::IoError, "cannot publish cache entry " + path.string());
  }
}

CompletionResponse cached_complete(const CompletionRequest& req, Backend& backend, const ResponseCache& cache,
                                   const RetryPolicy& policy, const Sleeper& sleep) {
  req.validate();
  if (auto hit = cache.lookup(req); hit.status == ResponseCache::LookupStatus::Hit) return std::move(*hit.response);
  auto resp = complete_with_retry(backend, req, policy, sleep);
  cache.store(req, resp);
  resp.cached = false;
  return resp;
}

}  // namespace causal_probe
