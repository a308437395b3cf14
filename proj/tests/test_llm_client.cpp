#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <json.hpp>

#include "tabgan/errors.hpp"
#include "tabgan/llm_client.hpp"
#include "tabgan/text_util.hpp"

using namespace tabgan;

namespace {

std::string ok_body(const std::string& content) {
  nlohmann::json j;
  j["choices"] = nlohmann::json::array();
  j["choices"].push_back({{"message", {{"role", "assistant"}, {"content", content}}}});
  return j.dump();
}

ProviderConfig test_config() {
  ProviderConfig config;
  config.api_key_env = "TABGAN_TEST_KEY";
  config.backoff_base_seconds = 0.0;  // keep retries instant in tests
  return config;
}

struct EnvVar {
  std::string name;
  EnvVar(const std::string& n, const std::string& value) : name(n) {
    setenv(name.c_str(), value.c_str(), 1);
  }
  ~EnvVar() { unsetenv(name.c_str()); }
};

}  // namespace

TEST_CASE("client retries a 429 and then succeeds") {
  EnvVar key("TABGAN_TEST_KEY", "sk-test");
  int calls = 0;
  auto transport = [&](const ProviderConfig&, const std::string& api_key,
                       const std::string&) -> HttpResponse {
    CHECK(api_key == "sk-test");
    ++calls;
    if (calls == 1) return {429, "slow down", ""};
    return {200, ok_body("[]"), ""};
  };
  LiveClient client(test_config(), transport);
  CHECK(client.complete({"sys", "user"}) == "[]");
  CHECK(calls == 2);
}

TEST_CASE("exhausted retries raise a provider error with the attempt count") {
  EnvVar key("TABGAN_TEST_KEY", "sk-test");
  auto config = test_config();
  config.max_retries = 2;
  int calls = 0;
  LiveClient client(config, [&](const ProviderConfig&, const std::string&,
                                const std::string&) -> HttpResponse {
    ++calls;
    return {500, "boom", ""};
  });
  try {
    client.complete({"sys", "user"});
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.attempts() == 3);
    CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
  }
  CHECK(calls == 3);
}

TEST_CASE("transport failures are retried like 5xx responses") {
  EnvVar key("TABGAN_TEST_KEY", "sk-test");
  int calls = 0;
  LiveClient client(test_config(), [&](const ProviderConfig&, const std::string&,
                                       const std::string&) -> HttpResponse {
    ++calls;
    if (calls < 3) return {0, "", "connection refused"};
    return {200, ok_body("ok"), ""};
  });
  CHECK(client.complete({"s", "u"}) == "ok");
  CHECK(calls == 3);
}

TEST_CASE("a missing API key environment variable fails before any request") {
  unsetenv("TABGAN_TEST_NO_SUCH_KEY");
  auto config = test_config();
  config.api_key_env = "TABGAN_TEST_NO_SUCH_KEY";
  int calls = 0;
  LiveClient client(config, [&](const ProviderConfig&, const std::string&,
                                const std::string&) -> HttpResponse {
    ++calls;
    return {200, ok_body("x"), ""};
  });
  CHECK_THROWS_AS(client.complete({"s", "u"}), ConfigError);
  CHECK(calls == 0);
}

TEST_CASE("authentication failures are not retried") {
  EnvVar key("TABGAN_TEST_KEY", "sk-test");
  int calls = 0;
  LiveClient client(test_config(), [&](const ProviderConfig&, const std::string&,
                                       const std::string&) -> HttpResponse {
    ++calls;
    return {401, "no", ""};
  });
  CHECK_THROWS_AS(client.complete({"s", "u"}), ProviderError);
  CHECK(calls == 1);
}

TEST_CASE("a malformed success body raises a provider error") {
  EnvVar key("TABGAN_TEST_KEY", "sk-test");
  LiveClient client(test_config(), [&](const ProviderConfig&, const std::string&,
                                       const std::string&) -> HttpResponse {
    return {200, "{\"unexpected\": true}", ""};
  });
  CHECK_THROWS_AS(client.complete({"s", "u"}), ProviderError);
}

TEST_CASE("chat body carries model, messages, and sampling settings") {
  ProviderConfig config;
  config.model = "test-model";
  ChatRequest request{"be brief", "hello", 1.0, 128};
  auto j = nlohmann::json::parse(build_chat_body(config, request));
  CHECK(j["model"] == "test-model");
  CHECK(j["temperature"] == 1.0);
  CHECK(j["max_tokens"] == 128);
  REQUIRE(j["messages"].size() == 2);
  CHECK(j["messages"][0]["role"] == "system");
  CHECK(j["messages"][0]["content"] == "be brief");
  CHECK(j["messages"][1]["role"] == "user");
  CHECK(j["messages"][1]["content"] == "hello");

  ChatRequest bad{"s", "u", 3.0, 16};
  CHECK_THROWS_AS(build_chat_body(config, bad), InvalidArgument);
}

TEST_CASE("content extraction handles the happy path and rejects bad shapes") {
  CHECK(extract_chat_content(ok_body("payload")) == "payload");
  CHECK_THROWS_AS(extract_chat_content("not json"), ProviderError);
  CHECK_THROWS_AS(extract_chat_content("{\"choices\": []}"), ProviderError);
}

TEST_CASE("transcript logging appends one JSON line per completed call") {
  EnvVar key("TABGAN_TEST_KEY", "sk-test");
  auto path = std::filesystem::temp_directory_path() / "tabgan_transcript_test.jsonl";
  std::filesystem::remove(path);

  auto config = test_config();
  config.transcript_path = path.string();
  LiveClient client(config, [&](const ProviderConfig&, const std::string&,
                                const std::string&) -> HttpResponse {
    return {200, ok_body("reply"), ""};
  });
  client.complete({"sys-a", "user-a"});
  client.complete({"sys-b", "user-b", 0.9, 64});

  auto lines = split_lines(read_file(path.string()));
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  REQUIRE(lines.size() == 2);
  auto first = nlohmann::json::parse(lines[0]);
  CHECK(first["system"] == "sys-a");
  CHECK(first["response"] == "reply");
  auto second = nlohmann::json::parse(lines[1]);
  CHECK(second["user"] == "user-b");
  CHECK(second["temperature"] == 0.9);
  std::filesystem::remove(path);
}
