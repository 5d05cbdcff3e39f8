#include "lifted/llm_client.hpp"

#include <cstdlib>
#include <sstream>

#ifdef LIFTED_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lifted/errors.hpp"

namespace lifted {

std::string stub_transform(std::string_view linearization, std::size_t max_tokens) {
  std::string cleaned;
  cleaned.reserve(linearization.size());
  for (char c : linearization) {
    if (c != '[' && c != ']' && c != '\'' && c != '"') cleaned.push_back(c);
  }
  std::istringstream words(cleaned);
  std::string out = "This sample concerns";
  std::string word;
  for (std::size_t n = 0; n < max_tokens && words >> word; ++n) {
    out.push_back(' ');
    out += word;
  }
  return out;
}

std::string StubLlmClient::complete(const PromptBundle& prompt) {
  return stub_transform(prompt.linearization);
}

ReplayLlmClient::ReplayLlmClient(const std::filesystem::path& cassette) {
  std::ifstream in(cassette);
  if (!in) throw DataError("cannot open cassette " + cassette.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto row = nlohmann::json::parse(line);
      responses_.insert_or_assign(row.at("prompt_hash").get<std::string>(),
                                  row.at("response").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(cassette.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string ReplayLlmClient::complete(const PromptBundle& prompt) {
  const auto key = prompt.hash();
  auto it = responses_.find(key);
  if (it == responses_.end()) throw LlmError("cassette has no response for prompt " + key, false);
  return it->second;
}

RecordingLlmClient::RecordingLlmClient(LlmClient& inner, const std::filesystem::path& cassette)
    : inner_(inner) {
  if (cassette.has_parent_path()) std::filesystem::create_directories(cassette.parent_path());
  out_.open(cassette, std::ios::app);
  if (!out_) throw DataError("cannot open cassette " + cassette.string() + " for writing");
}

std::string RecordingLlmClient::complete(const PromptBundle& prompt) {
  auto response = inner_.complete(prompt);
  const nlohmann::json row = {{"prompt_hash", prompt.hash()}, {"response", response}};
  std::lock_guard lock(mutex_);
  out_ << row.dump() << '\n';
  out_.flush();
  return response;
}

HttpLlmSettings HttpLlmSettings::from_env() {
  auto env = [](const char* key) {
    const char* v = std::getenv(key);
    return v ? std::string(v) : std::string{};
  };
  HttpLlmSettings s;
  s.endpoint = env(kEnvLlmEndpoint);
  s.model = env(kEnvLlmModel);
  s.api_key = env(kEnvLlmApiKey);
  if (s.endpoint.empty()) {
    throw ContractError(std::string(kEnvLlmEndpoint) + " is not set for the http LLM client");
  }
  if (s.model.empty()) s.model = "gpt-3.5-turbo";
  return s;
}

HttpLlmClient::HttpLlmClient(HttpLlmSettings settings) : settings_(std::move(settings)) {
  const auto scheme_end = settings_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ContractError("LLM endpoint must be an absolute URL: " + settings_.endpoint);
  }
  const auto path_start = settings_.endpoint.find('/', scheme_end + 3);
  origin_ = settings_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : settings_.endpoint.substr(path_start);
}

std::string HttpLlmClient::request_body(const PromptBundle& prompt, std::string_view model) {
  const nlohmann::json body = {
      {"model", model},
      {"messages",
       {{{"role", "system"}, {"content", prompt.system_message}},
        {{"role", "user"}, {"content", prompt.render()}}}},
      {"temperature", 0},
  };
  return body.dump();
}

std::string HttpLlmClient::complete(const PromptBundle& prompt) {
  httplib::Client client(origin_);
  client.set_connection_timeout(settings_.timeout_seconds);
  client.set_read_timeout(settings_.timeout_seconds);
  if (!settings_.api_key.empty()) client.set_bearer_token_auth(settings_.api_key);
  auto res = client.Post(path_, request_body(prompt, settings_.model), "application/json");
  if (!res) {
    throw LlmError("request to " + settings_.endpoint + " failed: " + httplib::to_string(res.error()),
                   true);
  }
  if (res->status != 200) {
    const bool retriable = res->status == 429 || res->status >= 500;
    throw LlmError("LLM endpoint returned HTTP " + std::to_string(res->status), retriable);
  }
  try {
    const auto reply = nlohmann::json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw LlmError(std::string("malformed chat completion: ") + e.what(), false);
  }
}

}  // namespace lifted
