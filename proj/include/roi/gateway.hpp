#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "roi/detail/digest.hpp"
#include "roi/detail/rng.hpp"
#include "roi/errors.hpp"

namespace roi {

struct Message {
  std::string role;  // system | user | assistant
  std::string content;
};

// One text-generation call. input_payload carries the raw input text that
// was spliced into the rendered messages; offline mock backends consume it
// directly, network backends ignore it.
struct GenerationRequest {
  std::vector<Message> messages;
  double temperature = 0.1;
  std::size_t num_beams = 4;
  std::int64_t seed = 0;
  std::size_t max_new_tokens = 256;
  std::string model_name = "default";
  std::string input_payload;

  void validate() const {
    for (const Message& m : messages) {
      if (m.role == "user") return;
    }
    throw Error(ErrorKind::data, "generation request needs at least one user message");
  }
};

enum class TaskKind {
  translate,
  summarize,
  rewrite_self,
  rewrite_back_translate,
  classify,
};

// An instruction with {input} and optional {label_hint} placeholders.
struct PromptTemplate {
  std::string name;
  std::string instruction_text;
  TaskKind task = TaskKind::translate;
};

// Substitutes placeholders and wraps the result in a single user message.
// The input text goes in verbatim; only placeholders present in the
// template itself are recognized, so braces inside the input are inert.
inline std::vector<Message> render_prompt(
    const PromptTemplate& tpl, std::string_view input_text,
    const std::optional<std::string>& label_hint = std::nullopt) {
  std::string rendered;
  rendered.reserve(tpl.instruction_text.size() + input_text.size());
  const std::string& text = tpl.instruction_text;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find('{', pos);
    if (open == std::string::npos) {
      rendered.append(text, pos, std::string::npos);
      break;
    }
    const std::size_t close = text.find('}', open);
    if (close == std::string::npos) {
      rendered.append(text, pos, std::string::npos);
      break;
    }
    rendered.append(text, pos, open - pos);
    const std::string_view name =
        std::string_view(text).substr(open + 1, close - open - 1);
    if (name == "input") {
      rendered.append(input_text);
    } else if (name == "label_hint") {
      if (!label_hint.has_value()) {
        throw Error(ErrorKind::data, "template '" + tpl.name +
                                         "' needs a label hint but none was given");
      }
      rendered.append(*label_hint);
    } else {
      throw Error(ErrorKind::data, "template '" + tpl.name +
                                       "' has unbound placeholder {" +
                                       std::string(name) + "}");
    }
    pos = close + 1;
  }
  return {Message{"user", std::move(rendered)}};
}

inline GenerationRequest make_request(const PromptTemplate& tpl,
                                      std::string_view input_text,
                                      const std::optional<std::string>& label_hint,
                                      GenerationRequest base) {
  base.messages = render_prompt(tpl, input_text, label_hint);
  base.input_payload = std::string(input_text);
  return base;
}

// Built-in prompt set. The self-rewrite hints for sentiment follow the
// usual positive/negative phrasing; other labels get a generic hint.
inline const PromptTemplate& builtin_template(std::string_view name) {
  static const std::vector<PromptTemplate> kTemplates = {
      {"translate_de_en",
       "Translate the following German text to English.\n\nGerman: {input}\n\nEnglish:",
       TaskKind::translate},
      {"back_translate_en_de",
       "Translate the following English text to German.\n\nEnglish: {input}\n\nGerman:",
       TaskKind::rewrite_back_translate},
      {"summarize_one_sentence",
       "Summarize the following article in a single sentence.\n\nArticle: {input}\n\nSummary:",
       TaskKind::summarize},
      {"classify_sentiment",
       "Decide whether the sentiment of the following sentence is positive or negative. "
       "Answer with a single word.\n\nSentence: {input}\n\nAnswer:",
       TaskKind::classify},
      {"rewrite_self",
       "Modify the input sentence to {label_hint}.\n\nInput: {input}\n\nRewritten:",
       TaskKind::rewrite_self},
      {"rewrite_fluent",
       "Rewrite the following text so it is clear and fluent without changing its "
       "meaning.\n\nText: {input}\n\nRewritten:",
       TaskKind::rewrite_self},
      {"passthrough", "{input}", TaskKind::rewrite_back_translate},
  };
  for (const PromptTemplate& tpl : kTemplates) {
    if (tpl.name == name) return tpl;
  }
  throw Error(ErrorKind::data, "unknown template '" + std::string(name) + "'");
}

inline std::string label_hint_phrase(std::string_view label) {
  if (label == "positive") {
    return "enhance its positive emotional tendency without altering the original meaning";
  }
  if (label == "negative") {
    return "amplify its negative emotional tendency without changing the original meaning";
  }
  return "strengthen its '" + std::string(label) +
         "' character without changing the original meaning";
}

enum class BackendKind {
  http_chat,
  mock_identity,
  mock_rules,
  replay,
};

inline const char* to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::http_chat:
      return "http_chat";
    case BackendKind::mock_identity:
      return "mock_identity";
    case BackendKind::mock_rules:
      return "mock_rules";
    case BackendKind::replay:
      return "replay";
  }
  return "?";
}

inline BackendKind parse_backend_kind(std::string_view name) {
  if (name == "http_chat") return BackendKind::http_chat;
  if (name == "mock_identity") return BackendKind::mock_identity;
  if (name == "mock_rules") return BackendKind::mock_rules;
  if (name == "replay") return BackendKind::replay;
  throw Error(ErrorKind::data, "unknown backend kind '" + std::string(name) + "'");
}

struct BackendSpec {
  BackendKind kind = BackendKind::mock_identity;
  std::string endpoint_url;  // http_chat only
  std::map<std::string, std::vector<std::string>> rules;  // mock_rules only
  std::uint64_t rules_seed = 0;
  std::string cache_dir;
  // A replay backend serves responses another backend produced, so cache
  // keys are computed with the producing backend's kind.
  BackendKind replay_source = BackendKind::mock_identity;
  std::size_t timeout_seconds = 30;
  std::size_t max_retries = 2;
  std::size_t retry_backoff_ms = 250;

  BackendKind effective_kind() const {
    return kind == BackendKind::replay ? replay_source : kind;
  }

  nlohmann::json to_json() const {
    nlohmann::json rules_json = nlohmann::json::object();
    for (const auto& [word, alts] : rules) rules_json[word] = alts;
    return nlohmann::json{{"kind", to_string(kind)},
                          {"endpoint_url", endpoint_url},
                          {"rules", rules_json},
                          {"rules_seed", rules_seed},
                          {"cache_dir", cache_dir},
                          {"replay_source", to_string(replay_source)}};
  }

  std::string digest() const { return detail::sha256_hex(to_json().dump()); }
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string generate(const GenerationRequest& request) = 0;
};

namespace detail {

inline std::string last_user_content(const GenerationRequest& request) {
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return {};
}

inline std::string payload_of(const GenerationRequest& request) {
  return request.input_payload.empty() ? last_user_content(request)
                                       : request.input_payload;
}

}  // namespace detail

// Echoes the request's input payload back unchanged.
class MockIdentityBackend final : public GenerationBackend {
 public:
  std::string generate(const GenerationRequest& request) override {
    return detail::payload_of(request);
  }
};

// Rewrites the input payload word by word through a substitution table.
// Words with several alternatives are resolved by a choice that depends
// only on (table seed, request seed, word position), so repeated runs are
// byte-identical and retries with a perturbed request seed can vary.
class MockRulesBackend final : public GenerationBackend {
 public:
  MockRulesBackend(std::map<std::string, std::vector<std::string>> rules,
                   std::uint64_t seed)
      : rules_(std::move(rules)), seed_(seed) {}

  std::string generate(const GenerationRequest& request) override {
    const std::string payload = detail::payload_of(request);
    std::istringstream in(payload);
    std::string word;
    std::string out;
    std::size_t position = 0;
    while (in >> word) {
      if (!out.empty()) out.push_back(' ');
      const auto it = rules_.find(word);
      if (it == rules_.end() || it->second.empty()) {
        out += word;
      } else if (it->second.size() == 1) {
        out += it->second.front();
      } else {
        detail::SplitMix64 rng(detail::mix64(
            seed_ ^ static_cast<std::uint64_t>(request.seed), position));
        out += it->second[rng.next_below(it->second.size())];
      }
      ++position;
    }
    return out;
  }

 private:
  std::map<std::string, std::vector<std::string>> rules_;
  std::uint64_t seed_;
};

// POST {endpoint}/chat/completions with retry and exponential backoff.
// Reads the bearer token from ROI_API_KEY when present.
class HttpChatBackend final : public GenerationBackend {
 public:
  explicit HttpChatBackend(const BackendSpec& spec) : spec_(spec) {
    if (spec_.endpoint_url.empty()) {
      throw Error(ErrorKind::data, "http_chat backend needs an endpoint URL");
    }
    const std::size_t scheme_end = spec_.endpoint_url.find("://");
    const std::size_t path_start =
        spec_.endpoint_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) {
      base_url_ = spec_.endpoint_url;
    } else {
      base_url_ = spec_.endpoint_url.substr(0, path_start);
      path_prefix_ = spec_.endpoint_url.substr(path_start);
      while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
  }

  std::string generate(const GenerationRequest& request) override {
    nlohmann::json messages = nlohmann::json::array();
    for (const Message& m : request.messages) {
      messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    const nlohmann::json body = {{"model", request.model_name},
                                 {"messages", messages},
                                 {"temperature", request.temperature},
                                 {"seed", request.seed},
                                 {"max_tokens", request.max_new_tokens}};
    httplib::Headers headers;
    if (const char* key = std::getenv("ROI_API_KEY")) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string failure;
    for (std::size_t attempt = 0; attempt <= spec_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(
            spec_.retry_backoff_ms << (attempt - 1)));
      }
      httplib::Client client(base_url_);
      client.set_connection_timeout(static_cast<time_t>(spec_.timeout_seconds));
      client.set_read_timeout(static_cast<time_t>(spec_.timeout_seconds));
      auto result = client.Post(path_prefix_ + "/chat/completions", headers,
                                body.dump(), "application/json");
      if (!result) {
        failure = "network error: " + httplib::to_string(result.error());
        continue;
      }
      if (result->status == 200) {
        return extract_content(result->body);
      }
      failure = "http status " + std::to_string(result->status);
      const bool retryable = result->status == 408 || result->status == 429 ||
                             result->status >= 500;
      if (!retryable) break;
    }
    throw Error(ErrorKind::backend, "chat completion failed: " + failure);
  }

 private:
  static std::string extract_content(const std::string& body) {
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::backend,
                  std::string("unparsable completion response: ") + e.what());
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty()) {
      throw Error(ErrorKind::backend, "completion response has no choices");
    }
    const nlohmann::json& message = parsed["choices"][0]["message"];
    if (!message.contains("content") || !message["content"].is_string()) {
      throw Error(ErrorKind::backend, "completion response has no message content");
    }
    return message["content"].get<std::string>();
  }

  BackendSpec spec_;
  std::string base_url_;
  std::string path_prefix_;
};

// One file per response under a two-level hex fan-out:
// {cache_dir}/{key[0..2]}/{key}.json holding {request, response, timestamp}.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::optional<std::string> lookup(const std::string& key) const {
    std::ifstream in(entry_path(key));
    if (!in) return std::nullopt;
    nlohmann::json entry;
    try {
      in >> entry;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
    if (!entry.contains("response") || !entry["response"].is_string()) {
      return std::nullopt;
    }
    return entry["response"].get<std::string>();
  }

  void store(const std::string& key, const nlohmann::json& request_json,
             const std::string& response) {
    const std::filesystem::path path = entry_path(key);
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw Error(ErrorKind::io, "cannot create cache directory " +
                                     path.parent_path().string() + ": " + ec.message());
    }
    const nlohmann::json entry = {
        {"request", request_json},
        {"response", response},
        {"timestamp",
         std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
             .count()}};
    // Concurrent writers each write their own temp file, then rename.
    const std::filesystem::path tmp =
        path.parent_path() / (key + ".tmp" + std::to_string(next_tmp_id()));
    {
      std::ofstream out(tmp);
      if (!out) {
        throw Error(ErrorKind::io, "cannot write cache file " + tmp.string());
      }
      out << entry.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
      std::filesystem::remove(tmp);
      throw Error(ErrorKind::io,
                  "cannot finalize cache file " + path.string() + ": " + ec.message());
    }
  }

  std::size_t entry_count() const {
    if (!std::filesystem::exists(dir_)) return 0;
    std::size_t count = 0;
    for (const auto& file : std::filesystem::recursive_directory_iterator(dir_)) {
      if (file.is_regular_file() && file.path().extension() == ".json") ++count;
    }
    return count;
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    if (!std::filesystem::exists(dir_)) return out;
    for (const auto& file : std::filesystem::recursive_directory_iterator(dir_)) {
      if (file.is_regular_file() && file.path().extension() == ".json") {
        out.push_back(file.path().stem().string());
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path entry_path(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
  }

  static std::uint64_t next_tmp_id() {
    static std::atomic<std::uint64_t> counter{0};
    return counter.fetch_add(1);
  }

  std::filesystem::path dir_;
};

inline nlohmann::json request_to_json(const GenerationRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const Message& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  return nlohmann::json{{"messages", messages},
                        {"temperature", request.temperature},
                        {"num_beams", request.num_beams},
                        {"seed", request.seed},
                        {"max_new_tokens", request.max_new_tokens},
                        {"model_name", request.model_name},
                        {"input_payload", request.input_payload}};
}

// Cache key over everything that determines a response. num_beams stays
// out: only the first beam is ever consumed.
inline std::string cache_key(const BackendSpec& spec,
                             const GenerationRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const Message& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  const nlohmann::json key_material =
      nlohmann::json::array({to_string(spec.effective_kind()), request.model_name,
                             messages, request.temperature, request.seed,
                             request.max_new_tokens});
  return detail::sha256_hex(key_material.dump());
}

// Thread-safe facade over one backend: bounded in-flight calls, response
// caching, and a dispatch counter tests use to prove replay runs offline.
class Gateway {
 public:
  explicit Gateway(BackendSpec spec, std::size_t max_inflight = 4)
      : spec_(std::move(spec)),
        inflight_(static_cast<std::ptrdiff_t>(max_inflight == 0 ? 1 : max_inflight)) {
    switch (spec_.kind) {
      case BackendKind::http_chat:
        backend_ = std::make_unique<HttpChatBackend>(spec_);
        break;
      case BackendKind::mock_identity:
        backend_ = std::make_unique<MockIdentityBackend>();
        break;
      case BackendKind::mock_rules:
        backend_ = std::make_unique<MockRulesBackend>(spec_.rules, spec_.rules_seed);
        break;
      case BackendKind::replay:
        if (spec_.cache_dir.empty()) {
          throw Error(ErrorKind::data, "replay backend needs a cache_dir");
        }
        break;
    }
    if (!spec_.cache_dir.empty()) cache_.emplace(spec_.cache_dir);
  }

  // Uncached generation. For replay specs this serves straight from the
  // cache and never touches any backend.
  std::string generate(const GenerationRequest& request) {
    request.validate();
    const std::string key = cache_key(spec_, request);
    if (spec_.kind == BackendKind::replay) {
      if (auto hit = cache_->lookup(key)) return *hit;
      throw Error(ErrorKind::backend, "replay cache miss for request " + key);
    }
    inflight_.acquire();
    struct Release {
      std::counting_semaphore<>& sem;
      ~Release() { sem.release(); }
    } release{inflight_};
    backend_calls_.fetch_add(1);
    try {
      return backend_->generate(request);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::backend,
                  "backend failure for request " + key + ": " + e.what());
    }
  }

  // Cache-through generation: a hit returns the stored text without any
  // backend call; a miss generates and stores.
  std::string cached_generate(const GenerationRequest& request) {
    request.validate();
    if (!cache_.has_value()) return generate(request);
    const std::string key = cache_key(spec_, request);
    if (auto hit = cache_->lookup(key)) return *hit;
    if (spec_.kind == BackendKind::replay) {
      throw Error(ErrorKind::backend, "replay cache miss for request " + key);
    }
    std::string text = generate(request);
    cache_->store(key, request_to_json(request), text);
    return text;
  }

  std::size_t backend_calls() const noexcept { return backend_calls_.load(); }
  const BackendSpec& spec() const noexcept { return spec_; }
  const std::optional<ResponseCache>& cache() const noexcept { return cache_; }

 private:
  BackendSpec spec_;
  std::unique_ptr<GenerationBackend> backend_;
  std::optional<ResponseCache> cache_;
  std::counting_semaphore<> inflight_;
  std::atomic<std::size_t> backend_calls_{0};
};

}  // namespace roi
