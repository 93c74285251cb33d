#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "causal_probe/openai_backend.hpp"

#include <cstdlib>

#include "causal_probe/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace causal_probe {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorKind::ConfigError, "base URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) out.prefix = url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

const char* env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

}  // namespace

OpenAIEndpoint OpenAIEndpoint::from_env() {
  OpenAIEndpoint ep;
  ep.base_url = env_or_empty("CAUSAL_PROBE_BASE_URL");
  ep.api_key = env_or_empty("CAUSAL_PROBE_API_KEY");
  if (ep.base_url.empty()) ep.base_url = "https://api.openai.com/v1";
  return ep;
}

std::string openai_request_body(const CompletionRequest& req) {
  return nlohmann::json{
      {"model", req.model_id},
      {"prompt", req.prompt_text},
      {"max_tokens", req.max_tokens},
      {"temperature", req.temperature},
      {"logprobs", req.top_logprobs},
  }.dump();
}

std::vector<TokenLogprob> parse_openai_topk(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::MalformedResponse, std::string("response is not JSON: ") + e.what());
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
    fail(ErrorKind::MalformedResponse, "response has no choices");
  }
  const auto& choice = doc["choices"][0];
  if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
    fail(ErrorKind::NoLogprobs, "choice carries no logprobs payload");
  }
  const auto& lp = choice["logprobs"];
  if (!lp.contains("top_logprobs") || !lp["top_logprobs"].is_array() || lp["top_logprobs"].empty() ||
      !lp["top_logprobs"][0].is_object()) {
    fail(ErrorKind::NoLogprobs, "logprobs payload lacks top_logprobs");
  }
  std::vector<TokenLogprob> topk;
  for (const auto& [token, value] : lp["top_logprobs"][0].items()) {
    if (!value.is_number()) fail(ErrorKind::MalformedResponse, "non-numeric logprob for '" + token + "'");
    topk.push_back({token, value.get<double>()});
  }
  if (topk.empty()) fail(ErrorKind::NoLogprobs, "empty top_logprobs");
  sort_topk(topk);
  return topk;
}

struct OpenAIBackend::Impl {
  OpenAIEndpoint endpoint;
  SplitUrl url;
  RateLimiter limiter;

  explicit Impl(OpenAIEndpoint ep)
      : endpoint(std::move(ep)), url(split_url(endpoint.base_url)), limiter(endpoint.requests_per_second) {}
};

OpenAIBackend::OpenAIBackend(OpenAIEndpoint endpoint) : impl_(std::make_unique<Impl>(std::move(endpoint))) {}

OpenAIBackend::~OpenAIBackend() = default;

std::string OpenAIBackend::id() const { return "openai:" + impl_->url.origin; }

CompletionResponse OpenAIBackend::do_complete(const CompletionRequest& req) {
  impl_->limiter.acquire();

  // httplib clients are not shareable across threads; one per call keeps
  // concurrent workers independent.
  httplib::Client client(impl_->url.origin);
  const auto timeout = std::chrono::duration<double>(impl_->endpoint.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!impl_->endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + impl_->endpoint.api_key);

  const auto res = client.Post(impl_->url.prefix + "/completions", headers, openai_request_body(req), "application/json");
  if (!res) fail(ErrorKind::NetworkError, "transport failure: " + httplib::to_string(res.error()));

  const int status = res->status;
  if (status == 401 || status == 403) fail(ErrorKind::AuthError, "HTTP " + std::to_string(status));
  if (status == 429) {
    double retry_after = 0.0;
    if (res->has_header("Retry-After")) {
      try {
        retry_after = std::stod(res->get_header_value("Retry-After"));
      } catch (const std::exception&) {
        retry_after = 0.0;
      }
    }
    throw RateLimitedError("HTTP 429", retry_after);
  }
  if (status >= 500) fail(ErrorKind::NetworkError, "HTTP " + std::to_string(status));
  if (status != 200) fail(ErrorKind::MalformedResponse, "HTTP " + std::to_string(status) + ": " + res->body);

  CompletionResponse resp;
  resp.topk = parse_openai_topk(res->body);
  if (static_cast<int>(resp.topk.size()) > req.top_logprobs) resp.topk.resize(static_cast<std::size_t>(req.top_logprobs));
  resp.backend_id = id();
  return resp;
}

}  // namespace causal_probe
