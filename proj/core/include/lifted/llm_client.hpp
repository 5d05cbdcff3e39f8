#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "lifted/prompt.hpp"

namespace lifted {

// Produces one natural-language description per prompt. Implementations
// must be safe to call concurrently. Failures raise LlmError.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const PromptBundle& prompt) = 0;
  virtual std::string_view name() const = 0;
};

// "This sample concerns <key>: <value>" where the value has list brackets and
// quotes removed and the whole text is cut to `max_tokens` whitespace tokens.
std::string stub_transform(std::string_view linearization, std::size_t max_tokens = 64);

// Deterministic offline client.
class StubLlmClient final : public LlmClient {
 public:
  std::string complete(const PromptBundle& prompt) override;
  std::string_view name() const override { return "stub"; }
};

// Serves responses from a JSONL cassette of {prompt_hash, response}.
// Unknown prompts raise a non-retriable LlmError.
class ReplayLlmClient final : public LlmClient {
 public:
  explicit ReplayLlmClient(const std::filesystem::path& cassette);
  std::string complete(const PromptBundle& prompt) override;
  std::string_view name() const override { return "replay"; }
  std::size_t size() const noexcept { return responses_.size(); }

 private:
  std::unordered_map<std::string, std::string> responses_;
};

// Forwards to `inner` and appends every exchange to a cassette.
class RecordingLlmClient final : public LlmClient {
 public:
  RecordingLlmClient(LlmClient& inner, const std::filesystem::path& cassette);
  std::string complete(const PromptBundle& prompt) override;
  std::string_view name() const override { return "record"; }

 private:
  LlmClient& inner_;
  std::mutex mutex_;
  std::ofstream out_;
};

struct HttpLlmSettings {
  // Full URL of an OpenAI-compatible chat-completions endpoint.
  std::string endpoint;
  std::string model;
  std::string api_key;
  int timeout_seconds = 60;

  // LIFTED_LLM_ENDPOINT, LIFTED_LLM_MODEL, LIFTED_LLM_API_KEY.
  static HttpLlmSettings from_env();
};

inline constexpr const char* kEnvLlmEndpoint = "LIFTED_LLM_ENDPOINT";
inline constexpr const char* kEnvLlmModel = "LIFTED_LLM_MODEL";
inline constexpr const char* kEnvLlmApiKey = "LIFTED_LLM_API_KEY";

// POSTs {model, messages: [system, user], temperature: 0} with bearer auth
// and returns choices[0].message.content.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(HttpLlmSettings settings);
  std::string complete(const PromptBundle& prompt) override;
  std::string_view name() const override { return "http"; }

  static std::string request_body(const PromptBundle& prompt, std::string_view model);

 private:
  HttpLlmSettings settings_;
  std::string origin_;
  std::string path_;
};

}  // namespace lifted
