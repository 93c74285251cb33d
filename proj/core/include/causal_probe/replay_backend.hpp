#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "causal_probe/backend.hpp"

namespace causal_probe {

struct ReplayEntry {
  std::string request_digest;
  std::vector<TokenLogprob> topk;
};

/// Parses a replay fixture (JSON-Lines of {request_digest, topk}).
/// topk is an array of {"token": str, "logprob": num}. Throws ParseError.
std::vector<ReplayEntry> load_replay_fixture(const std::filesystem::path& path);

/// One fixture line in the same layout load_replay_fixture reads.
std::string replay_fixture_line(const ReplayEntry& entry);

/// Serves recorded responses keyed by request digest. A miss is ReplayMiss.
class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(std::vector<ReplayEntry> entries, std::string backend_id = "replay");
  static ReplayBackend from_file(const std::filesystem::path& path);

  std::string id() const override { return id_; }
  bool contains(const CompletionRequest& req) const;
  std::size_t size() const noexcept { return table_.size(); }

 protected:
  CompletionResponse do_complete(const CompletionRequest& req) override;

 private:
  std::unordered_map<std::string, std::vector<TokenLogprob>> table_;
  std::string id_;
};

}  // namespace causal_probe
