#pragma once

#include <atomic>
#include <filesystem>
#include <optional>

#include "causal_probe/backend.hpp"

namespace causal_probe {

/// Content-addressed response store.
///
/// Entries live at <dir>/<first two hex>/<digest>.json and hold the
/// request, the response, a SHA-256 checksum over both and a timestamp.
/// Writes go to a temp file and are renamed into place.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  enum class LookupStatus { Hit, Miss, Corrupt };

  struct Lookup {
    LookupStatus status = LookupStatus::Miss;
    std::optional<CompletionResponse> response;
  };

  /// A corrupt entry (bad JSON, checksum or request mismatch) is moved
  /// aside to <digest>.json.corrupt and reported as Corrupt.
  Lookup lookup(const CompletionRequest& req) const;

  void store(const CompletionRequest& req, const CompletionResponse& resp) const;

  std::filesystem::path entry_path(const CompletionRequest& req) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

  std::uint64_t quarantined() const noexcept { return quarantined_.load(); }

 private:
  std::filesystem::path dir_;
  mutable std::atomic<std::uint64_t> quarantined_{0};
};

/// Serves from the cache when possible (cached=true, no backend call);
/// otherwise calls the backend with retries and persists the result.
CompletionResponse cached_complete(const CompletionRequest& req, Backend& backend, const ResponseCache& cache,
                                   const RetryPolicy& policy = {}, const Sleeper& sleep = {});

}  // namespace causal_probe
