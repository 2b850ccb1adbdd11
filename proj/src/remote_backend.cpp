#include "mvabsa/remote_backend.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <httplib.h>
#include <json.hpp>

#include "mvabsa/grammar.hpp"

namespace mvabsa {

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    throw ConfigError("remote backend needs a base URL");
  }
  if (config_.model.empty()) {
    throw ConfigError("remote backend needs a model name");
  }
}

int RemoteBackend::count_tokens(const std::string& text) const {
  // Rule-of-thumb accounting; the serving side enforces the real limit.
  return static_cast<int>((text.size() + 3) / 4);
}

std::string RemoteBackend::build_request_body(const DecodeRequest& request) const {
  nlohmann::json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::json::array(
      {{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  if (!request.stop_sequence.empty()) {
    body["stop"] = nlohmann::json::array({request.stop_sequence});
  }
  body["logprobs"] = true;
  body["top_logprobs"] = config_.top_logprobs;
  if (request.seed) {
    body["seed"] = *request.seed;
  }
  if (request.constraint && config_.forward_grammar) {
    body["guided_grammar"] = schema_to_ebnf(request.constraint->schema);
  }
  return body.dump();
}

GenerationRecord RemoteBackend::parse_response_body(const std::string& body,
                                                    const DecodeRequest& request) const {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed completion response: ") + e.what());
  }
  if (!doc.contains("choices") || doc["choices"].empty()) {
    throw BackendError("completion response has no choices");
  }
  const nlohmann::json& choice = doc["choices"][0];

  GenerationRecord record;
  record.text = choice.at("message").at("content").get<std::string>();
  std::string finish = choice.value("finish_reason", "");
  // The protocol drops the matched stop string; the grammar needs it back.
  if (finish == "stop" && !request.stop_sequence.empty() &&
      (record.text.size() < request.stop_sequence.size() ||
       record.text.compare(record.text.size() - request.stop_sequence.size(),
                           request.stop_sequence.size(),
                           request.stop_sequence) != 0)) {
    record.text += request.stop_sequence;
  }

  if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
    throw BackendError("completion response lacks logprobs; enable them server-side");
  }
  std::map<std::string, int> intern;
  auto intern_token = [&](const std::string& token) {
    auto [it, inserted] = intern.try_emplace(token, static_cast<int>(intern.size()));
    return it->second;
  };
  for (const auto& step : choice["logprobs"].at("content")) {
    std::string emitted = step.at("token").get<std::string>();
    double emitted_logprob = step.at("logprob").get<double>();
    int emitted_id = intern_token(emitted);

    TokenDistribution dist;
    std::map<int, double> probs;
    probs[emitted_id] = std::exp(emitted_logprob);
    if (step.contains("top_logprobs")) {
      for (const auto& alt : step["top_logprobs"]) {
        int id = intern_token(alt.at("token").get<std::string>());
        probs[id] = std::exp(alt.at("logprob").get<double>());
      }
    }
    double sum = 0.0;
    for (const auto& [id, p] : probs) sum += p;
    double scale = sum > 1.0 ? 1.0 / sum : 1.0;
    for (const auto& [id, p] : probs) {
      dist.probabilities.push_back({id, p * scale});
    }
    dist.coverage = std::min(sum, 1.0);

    record.tokens.push_back(emitted_id);
    record.per_token_entropy.push_back(entropy(dist));
    record.per_token_confidence.push_back(std::min(std::exp(emitted_logprob), 1.0));
    record.per_token.push_back(std::move(dist));
  }
  if (record.tokens.empty()) {
    throw BackendError("completion response contains no generated tokens");
  }
  record.mean_entropy = mean_entropy(record);

  if (request.constraint) {
    auto automaton = request.constraint->automaton
                         ? request.constraint->automaton
                         : compile(request.constraint->schema);
    if (auto offset = automaton->first_violation(record.text)) {
      throw BackendError("remote output violates the schema at byte " +
                         std::to_string(*offset) + ": " + record.text);
    }
  }
  return record;
}

GenerationRecord RemoteBackend::decode(const DecodeRequest& request) {
  check_context_budget(request);

  // One client per call keeps decode() safe under the scheduler's
  // group-parallel dispatch.
  httplib::Client client(config_.base_url);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_connection_timeout(config_.timeout_seconds, 0);

  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  auto res = client.Post("/v1/chat/completions", headers,
                         build_request_body(request), "application/json");
  if (!res) {
    throw BackendError("transport failure talking to " + config_.base_url + ": " +
                       httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw BackendError("completion endpoint returned HTTP " +
                       std::to_string(res->status) + ": " +
                       res->body.substr(0, 512));
  }
  return parse_response_body(res->body, request);
}

}  // namespace mvabsa
