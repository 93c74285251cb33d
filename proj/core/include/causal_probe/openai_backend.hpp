#pragma once

#include <memory>
#include <string>

#include "causal_probe/backend.hpp"

namespace causal_probe {

struct OpenAIEndpoint {
  /// e.g. "https://api.openai.com/v1"; requests go to <base_url>/completions.
  std::string base_url;
  std::string api_key;
  double timeout_seconds = 60.0;
  double requests_per_second = 0.0;  // 0 disables the shared limiter

  /// Reads CAUSAL_PROBE_BASE_URL and CAUSAL_PROBE_API_KEY.
  static OpenAIEndpoint from_env();
};

/// Client for OpenAI-compatible legacy completions endpoints.
///
/// Request body: {"model", "prompt", "max_tokens", "temperature", "logprobs"}
/// where "logprobs" is the requested top-k width. The top tokens are read
/// from choices[0].logprobs.top_logprobs[0], an object mapping token text
/// to its natural-log probability.
///
/// Status mapping: 401/403 AuthError, 429 RateLimited (Retry-After honored),
/// 5xx and transport failures NetworkError, anything else MalformedResponse.
class OpenAIBackend final : public Backend {
 public:
  explicit OpenAIBackend(OpenAIEndpoint endpoint);
  ~OpenAIBackend() override;

  std::string id() const override;

 protected:
  CompletionResponse do_complete(const CompletionRequest& req) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Body sent for `req`; exposed for wire-format tests.
std::string openai_request_body(const CompletionRequest& req);

/// Extracts the first position's top-k from a completions response body.
/// Throws NoLogprobs or MalformedResponse.
std::vector<TokenLogprob> parse_openai_topk(const std::string& body);

}  // namespace causal_probe
