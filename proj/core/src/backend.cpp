#include "causal_probe/backend.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "causal_probe/error.hpp"
#include "causal_probe/hash.hpp"
#include "json.hpp"

namespace causal_probe {
namespace {

std::atomic<std::uint64_t> g_call_count{0};

}  // namespace

void CompletionRequest::validate() const {
  if (max_tokens < 1) fail(ErrorKind::InvalidRequest, "max_tokens must be positive");
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    fail(ErrorKind::InvalidRequest, "temperature must be >= 0");
  }
  if (top_logprobs < 1 || top_logprobs > 20) fail(ErrorKind::InvalidRequest, "top_logprobs must be in [1,20]");
}

void CompletionResponse::validate() const {
  if (topk.empty()) fail(ErrorKind::MalformedResponse, "empty top-k list");
  for (std::size_t i = 0; i < topk.size(); ++i) {
    if (!(topk[i].logprob <= 0.0)) {
      fail(ErrorKind::MalformedResponse, "positive or NaN logprob for token '" + topk[i].token + "'");
    }
    if (i > 0 && topk[i].logprob > topk[i - 1].logprob) {
      fail(ErrorKind::MalformedResponse, "top-k list not sorted by descending logprob");
    }
  }
}

std::string canonical_request_json(const CompletionRequest& req) {
  // nlohmann::json objects are key-sorted; dump() without indent has no padding.
  nlohmann::json j = {
      {"max_tokens", req.max_tokens},
      {"model_id", req.model_id},
      {"prompt_text", req.prompt_text},
      {"temperature", req.temperature},
      {"top_logprobs", req.top_logprobs},
  };
  return j.dump();
}

std::string request_digest(const CompletionRequest& req) { return sha256_hex(canonical_request_json(req)); }

void sort_topk(std::vector<TokenLogprob>& topk) {
  std::stable_sort(topk.begin(), topk.end(), [](const TokenLogprob& a, const TokenLogprob& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.token < b.token;
  });
}

std::uint64_t backend_call_count() noexcept { return g_call_count.load(); }

CompletionResponse Backend::complete(const CompletionRequest& req) {
  req.validate();
  g_call_count.fetch_add(1);
  auto resp = do_complete(req);
  resp.cached = false;
  resp.validate();
  return resp;
}

CompletionResponse complete_with_retry(Backend& backend, const CompletionRequest& req, const RetryPolicy& policy,
                                       const Sleeper& sleep) {
  auto delay = policy.base_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      return backend.complete(req);
    } catch (const RateLimitedError& e) {
      if (attempt >= policy.max_attempts) throw;
      const std::chrono::duration<double> hint{e.retry_after_seconds()};
      const auto wait = std::max(delay, hint);
      if (sleep) sleep(wait); else std::this_thread::sleep_for(wait);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NetworkError || attempt >= policy.max_attempts) throw;
      if (sleep) sleep(delay); else std::this_thread::sleep_for(delay);
    }
    delay *= policy.factor;
  }
}

RateLimiter::RateLimiter(double requests_per_second)
    : interval_(requests_per_second > 0.0 ? 1.0 / requests_per_second : 0.0), next_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (interval_.count() <= 0.0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + std::chrono::duration_cast<std::chrono::steady_clock::duration>(interval_);
  }
  std::this_thread::sleep_until(slot);
}

}  // namespace causal_probe
