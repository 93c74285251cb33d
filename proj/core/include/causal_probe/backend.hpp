#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "causal_probe/types.hpp"

namespace causal_probe {

struct CompletionRequest {
  std::string prompt_text;
  int max_tokens = 1;
  double temperature = 0.0;
  int top_logprobs = 5;
  std::string model_id;

  /// Throws InvalidRequest on out-of-range fields.
  void validate() const;

  friend bool operator==(const CompletionRequest&, const CompletionRequest&) = default;
};

struct CompletionResponse {
  std::vector<TokenLogprob> topk;  // sorted by descending logprob
  std::string backend_id;
  bool cached = false;

  /// Throws MalformedResponse if topk is empty, unsorted or has positive logprobs.
  void validate() const;
};

/// Canonical serialization: sorted keys, no insignificant whitespace.
std::string canonical_request_json(const CompletionRequest& req);

/// SHA-256 hex over canonical_request_json; the cache and replay key.
std::string request_digest(const CompletionRequest& req);

/// Sorts by descending logprob; ties keep token order (by text) for stability.
void sort_topk(std::vector<TokenLogprob>& topk);

/// Non-cached backend invocations since process start.
std::uint64_t backend_call_count() noexcept;

class Backend {
 public:
  virtual ~Backend() = default;

  /// One backend invocation. Bumps backend_call_count().
  CompletionResponse complete(const CompletionRequest& req);

  virtual std::string id() const = 0;

 protected:
  virtual CompletionResponse do_complete(const CompletionRequest& req) = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::duration<double> base_delay{1.0};
  double factor = 2.0;
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;

/// Calls backend.complete, retrying NetworkError and RateLimited with
/// exponential backoff. A larger retry-after hint overrides the backoff.
CompletionResponse complete_with_retry(Backend& backend, const CompletionRequest& req,
                                       const RetryPolicy& policy = {}, const Sleeper& sleep = {});

/// Minimum spacing between request starts, shared by concurrent callers.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::duration<double> interval_;
  std::chrono::steady_clock::time_point next_;
};

}  // namespace causal_probe
