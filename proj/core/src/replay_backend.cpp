#include "causal_probe/replay_backend.hpp"

#include <fstream>

#include "causal_probe/error.hpp"
#include "json.hpp"

namespace causal_probe {

std::vector<ReplayEntry> load_replay_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open replay fixture " + path.string());
  std::vector<ReplayEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      ReplayEntry e;
      e.request_digest = j.at("request_digest").get<std::string>();
      for (const auto& t : j.at("topk")) {
        e.topk.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
      }
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorKind::ParseError, where + ": " + ex.what());
    }
  }
  return out;
}

std::string replay_fixture_line(const ReplayEntry& entry) {
  nlohmann::json topk = nlohmann::json::array();
  for (const auto& t : entry.topk) topk.push_back({{"logprob", t.logprob}, {"token", t.token}});
  return nlohmann::json{{"request_digest", entry.request_digest}, {"topk", std::move(topk)}}.dump();
}

ReplayBackend::ReplayBackend(std::vector<ReplayEntry> entries, std::string backend_id) : id_(std::move(backend_id)) {
  for (auto& e : entries) {
    sort_topk(e.topk);
    table_.insert_or_assign(std::move(e.request_digest), std::move(e.topk));
  }
}

ReplayBackend ReplayBackend::from_file(const std::filesystem::path& path) {
  return ReplayBackend(load_replay_fixture(path), "replay:" + path.filename().string());
}

bool ReplayBackend::contains(const CompletionRequest& req) const { return table_.contains(request_digest(req)); }

CompletionResponse ReplayBackend::do_complete(const CompletionRequest& req) {
  const auto digest = request_digest(req);
  const auto it = table_.find(digest);
  if (it == table_.end()) fail(ErrorKind::ReplayMiss, "no recorded response for request " + digest);
  CompletionResponse resp;
  resp.topk = it->second;
  if (static_cast<int>(resp.topk.size()) > req.top_logprobs) resp.topk.resize(static_cast<std::size_t>(req.top_logprobs));
  resp.backend_id = id_;
  return resp;
}

}  // namespace causal_probe
