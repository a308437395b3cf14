#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

namespace tabgan {

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.5;  // must lie in [0, 2]
  int max_tokens = 2048;
};

struct ProviderConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string api_key_env = "MALLMGAN_API_KEY";  // key comes only from the environment
  double timeout_seconds = 60.0;
  int max_retries = 3;
  double backoff_base_seconds = 0.5;
  std::string transcript_path;  // empty disables request/response logging
};

// Abstract chat backend. The trainer and generator only ever see this
// interface; live and mock backends are interchangeable behind it.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

// Raw HTTP exchange result. status == 0 means the transport itself failed
// (connect error, timeout) and `error` describes why.
struct HttpResponse {
  int status = 0;
  std::string body;
  std::string error;
};

// Pluggable transport: (config, api_key, request_body_json) -> response.
// Tests substitute scripted transports; production uses the HTTP default.
using HttpTransport =
    std::function<HttpResponse(const ProviderConfig&, const std::string&, const std::string&)>;

HttpTransport default_http_transport();

// OpenAI-compatible chat-completions client. Retries transport failures,
// 429s, and 5xx responses with exponential backoff (backoff_base * 2^attempt);
// auth and other 4xx failures are surfaced immediately.
class LiveClient : public ChatClient {
 public:
  explicit LiveClient(ProviderConfig config);
  LiveClient(ProviderConfig config, HttpTransport transport);

  std::string complete(const ChatRequest& request) override;

  const ProviderConfig& config() const { return config_; }

 private:
  ProviderConfig config_;
  HttpTransport transport_;
  std::mutex transcript_mutex_;
};

// POST body for {base_url}/chat/completions.
std::string build_chat_body(const ProviderConfig& config, const ChatRequest& request);

// Pulls choices[0].message.content out of a chat-completions response.
// Throws ProviderError when the shape is wrong.
std::string extract_chat_content(const std::string& body);

}  // namespace tabgan
