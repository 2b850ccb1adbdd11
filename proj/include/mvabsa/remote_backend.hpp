#pragma once

#include <string>

#include "mvabsa/backend.hpp"

namespace mvabsa {

struct RemoteConfig {
  std::string base_url;  // e.g. "http://localhost:8000"
  std::string model;
  std::string api_key;       // sent as a bearer token when non-empty
  int top_logprobs = 20;     // logprob depth requested per position
  bool forward_grammar = false;  // attach the schema as a guided_grammar field
  int timeout_seconds = 120;
  int max_context_tokens = 16384;
};

// OpenAI-compatible chat/completions client with log-probability fields
// enabled. Distributions cover only the returned top-k mass (coverage < 1);
// entropy is computed on the renormalized support. When a schema constraint
// is present the response text is validated against the compiled automaton,
// and optionally the grammar is forwarded server-side.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  GenerationRecord decode(const DecodeRequest& request) override;
  int count_tokens(const std::string& text) const override;
  int max_context_tokens() const override { return config_.max_context_tokens; }

  const RemoteConfig& config() const { return config_; }

  // Request/response shaping, separated out for loopback tests.
  std::string build_request_body(const DecodeRequest& request) const;
  GenerationRecord parse_response_body(const std::string& body,
                                       const DecodeRequest& request) const;

 private:
  RemoteConfig config_;
};

}  // namespace mvabsa
