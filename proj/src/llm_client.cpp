#include "tabgan/llm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "tabgan/errors.hpp"

namespace tabgan {

namespace {

struct ParsedUrl {
  std::string scheme_host;  // e.g. https://api.openai.com
  std::string path_prefix;  // e.g. /v1
};

ParsedUrl parse_base_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("base_url must start with http:// or https://: " + base_url);
  }
  auto path_start = base_url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.scheme_host = base_url;
  } else {
    out.scheme_host = base_url.substr(0, path_start);
    out.path_prefix = base_url.substr(path_start);
  }
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

}  // namespace

HttpTransport default_http_transport() {
  return [](const ProviderConfig& config, const std::string& api_key,
            const std::string& body) -> HttpResponse {
    ParsedUrl url = parse_base_url(config.base_url);
    httplib::Client client(url.scheme_host);
    client.set_connection_timeout(std::chrono::milliseconds(
        static_cast<int>(config.timeout_seconds * 1000)));
    client.set_read_timeout(
        std::chrono::milliseconds(static_cast<int>(config.timeout_seconds * 1000)));
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto result = client.Post(url.path_prefix + "/chat/completions", headers, body,
                              "application/json");
    HttpResponse response;
    if (!result) {
      response.status = 0;
      response.error = httplib::to_string(result.error());
      return response;
    }
    response.status = result->status;
    response.body = result->body;
    return response;
  };
}

LiveClient::LiveClient(ProviderConfig config)
    : LiveClient(std::move(config), default_http_transport()) {}

LiveClient::LiveClient(ProviderConfig config, HttpTransport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (config_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

std::string build_chat_body(const ProviderConfig& config, const ChatRequest& request) {
  if (request.temperature < 0.0 || request.temperature > 2.0) {
    throw InvalidArgument("temperature must lie in [0, 2]");
  }
  nlohmann::json body;
  body["model"] = config.model;
  body["messages"] = nlohmann::json::array({
      nlohmann::json{{"role", "system"}, {"content", request.system}},
      nlohmann::json{{"role", "user"}, {"content", request.user}},
  });
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  return body.dump();
}

std::string extract_chat_content(const std::string& body) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ProviderError("provider response is not JSON");
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw ProviderError("provider response has no choices");
  }
  const auto& first = j["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw ProviderError("provider response has no message content");
  }
  return first["message"]["content"].get<std::string>();
}

std::string LiveClient::complete(const ChatRequest& request) {
  std::string api_key;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("environment variable " + config_.api_key_env +
                        " is not set; it must carry the API key");
    }
    api_key = key;
  }

  const std::string body = build_chat_body(config_, request);
  const int attempts_allowed = config_.max_retries + 1;
  HttpResponse last;
  for (int attempt = 0; attempt < attempts_allowed; ++attempt) {
    if (attempt > 0) {
      auto delay = config_.backoff_base_seconds * static_cast<double>(1 << (attempt - 1));
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    last = transport_(config_, api_key, body);

    bool retryable = last.status == 0 || last.status == 429 || last.status >= 500;
    if (retryable) {
      if (attempt + 1 < attempts_allowed) continue;
      std::string reason = last.status == 0 ? ("transport failure: " + last.error)
                                            : ("HTTP " + std::to_string(last.status));
      throw ProviderError("chat completion failed after " + std::to_string(attempts_allowed) +
                              " attempts (" + reason + ")",
                          attempts_allowed);
    }
    if (last.status == 401 || last.status == 403) {
      throw ProviderError("authentication rejected (HTTP " + std::to_string(last.status) + ")",
                          attempt + 1);
    }
    if (last.status != 200) {
      throw ProviderError("provider returned HTTP " + std::to_string(last.status), attempt + 1);
    }

    std::string content = extract_chat_content(last.body);
    if (!config_.transcript_path.empty()) {
      nlohmann::json line;
      line["model"] = config_.model;
      line["system"] = request.system;
      line["user"] = request.user;
      line["temperature"] = request.temperature;
      line["max_tokens"] = request.max_tokens;
      line["response"] = content;
      std::lock_guard<std::mutex> lock(transcript_mutex_);
      std::ofstream out(config_.transcript_path, std::ios::app);
      if (out) out << line.dump() << "\n";
    }
    return content;
  }
  throw ProviderError("chat completion failed", attempts_allowed);
}

}  // namespace tabgan
