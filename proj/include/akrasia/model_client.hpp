#pragma once

// Model access. HttpModel speaks the OpenAI-compatible chat-completions
// protocol with bounded exponential-backoff retries; MockModel replays a
// deterministic script keyed by (item id, condition variant) for offline and
// test runs. beam_ish_complete() implements the rerank regime: n independent
// samples, first judged-correct sample wins, sample 0 as fallback.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "akrasia/common.hpp"
#include "akrasia/judge.hpp"
#include "akrasia/types.hpp"

namespace akrasia {

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct CompletionResult {
  std::string text;
  int latency_ms = 0;
  int attempt = 1;       // attempts consumed by the winning request
  int sample_index = 0;  // position among requested samples
  std::optional<TokenUsage> usage;
};

// Which trial a request belongs to. HttpModel ignores it; MockModel keys its
// script on it.
struct TrialKey {
  std::string item_id;
  std::string variant;
};

class Model {
 public:
  virtual ~Model() = default;
  virtual std::string id() const = 0;
  // Single completion. regime.n_samples must be 1.
  virtual CompletionResult complete(const std::string& prompt,
                                    const DecodingRegime& regime,
                                    const TrialKey& key) = 0;
  // n independent samples, order-stamped by sample_index.
  virtual std::vector<CompletionResult> sample(const std::string& prompt,
                                               const DecodingRegime& regime,
                                               const TrialKey& key, int n) = 0;
};

// ---------------------------------------------------------------------------
// Mock model.

class MockModel final : public Model {
 public:
  MockModel() = default;
  explicit MockModel(std::string model_id) : model_id_(std::move(model_id)) {}

  void set_default_response(std::string text) { default_ = std::move(text); }
  void set_id(std::string model_id) { model_id_ = std::move(model_id); }

  void script(const std::string& item_id, const std::string& variant,
              std::vector<std::string> samples) {
    script_[item_id + "/" + variant] = std::move(samples);
  }

  void script(const std::string& item_id, const std::string& variant,
              std::string text) {
    script(item_id, variant, std::vector<std::string>{std::move(text)});
  }

  // Script file format:
  //   {"model"?: "name", "default"?: "text",
  //    "responses"?: {"<item id>": {"<variant>": "text" | ["s0", ...]}}}
  static MockModel from_file(const std::filesystem::path& path) {
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": invalid mock script: " + e.what());
    }
    if (!obj.is_object()) {
      throw ConfigError(path.string() + ": mock script must be a JSON object");
    }
    MockModel mock(obj.value("model", std::string("MockModel")));
    if (obj.contains("default")) {
      mock.set_default_response(obj.at("default").get<std::string>());
    }
    if (obj.contains("responses")) {
      for (const auto& [item_id, variants] : obj.at("responses").items()) {
        if (!variants.is_object()) {
          throw ConfigError(path.string() + ": responses." + item_id +
                            " must map variants to texts");
        }
        for (const auto& [variant, value] : variants.items()) {
          ConditionVariant::from_key(variant);  // reject unknown variants
          if (value.is_string()) {
            mock.script(item_id, variant, value.get<std::string>());
          } else if (value.is_array()) {
            std::vector<std::string> samples;
            for (const auto& s : value) samples.push_back(s.get<std::string>());
            if (samples.empty()) {
              throw ConfigError(path.string() + ": responses." + item_id + "." +
                                variant + " is an empty sample list");
            }
            mock.script(item_id, variant, std::move(samples));
          } else {
            throw ConfigError(path.string() + ": responses." + item_id + "." +
                              variant + " must be a string or string array");
          }
        }
      }
    }
    return mock;
  }

  std::string id() const override { return model_id_; }

  CompletionResult complete(const std::string& prompt,
                            const DecodingRegime& regime,
                            const TrialKey& key) override {
    (void)prompt;
    (void)regime;
    CompletionResult r;
    r.text = lookup(key, 0);
    return r;
  }

  std::vector<CompletionResult> sample(const std::string& prompt,
                                       const DecodingRegime& regime,
                                       const TrialKey& key, int n) override {
    (void)prompt;
    (void)regime;
    std::vector<CompletionResult> out;
    for (int i = 0; i < n; ++i) {
      CompletionResult r;
      r.text = lookup(key, i);
      r.sample_index = i;
      out.push_back(std::move(r));
    }
    return out;
  }

 private:
  std::string lookup(const TrialKey& key, int sample_index) const {
    auto it = script_.find(key.item_id + "/" + key.variant);
    if (it != script_.end()) {
      const std::vector<std::string>& samples = it->second;
      // Scripts shorter than the request repeat their last entry.
      std::size_t idx = std::min<std::size_t>(sample_index, samples.size() - 1);
      return samples[idx];
    }
    if (default_) return *default_;
    throw Error("mock model: no scripted response for item '" + key.item_id +
                "' variant '" + key.variant + "' and no default is set");
  }

  std::string model_id_ = "MockModel";
  std::map<std::string, std::vector<std::string>> script_;
  std::optional<std::string> default_;
};

// ---------------------------------------------------------------------------
// HTTP model.

struct HttpConfig {
  std::string base_url;               // e.g. http://localhost:8000/v1
  std::string model_id;
  std::string api_key_env = "OPENAI_API_KEY";  // "" or "none" disables auth
  double timeout_s = 60.0;
  int max_attempts = 5;
  int backoff_base_ms = 1000;         // doubles per retry, +/- jitter
  double backoff_jitter = 0.25;
  int concurrency = 4;                // max in-flight requests
};

class HttpModel final : public Model {
 public:
  explicit HttpModel(HttpConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("base_url is required");
    if (config_.model_id.empty()) throw ConfigError("model id is required");
    split_url();
    if (!config_.api_key_env.empty() && config_.api_key_env != "none") {
      const char* key = std::getenv(config_.api_key_env.c_str());
      if (key == nullptr || *key == '\0') {
        throw ConfigError("environment variable " + config_.api_key_env +
                          " is not set (pass --api-key-env none for endpoints "
                          "without authentication)");
      }
      api_key_ = key;
    }
  }

  std::string id() const override { return config_.model_id; }

  CompletionResult complete(const std::string& prompt,
                            const DecodingRegime& regime,
                            const TrialKey& key) override {
    (void)key;
    if (regime.n_samples != 1) {
      throw Error("complete() requires a single-sample regime; use sample()");
    }
    Exchange ex = post(payload(prompt, regime, 1));
    std::vector<CompletionResult> parsed = parse_choices(ex);
    if (parsed.empty()) {
      throw ParseError("model response contained no choices: " + ex.body);
    }
    return parsed.front();
  }

  std::vector<CompletionResult> sample(const std::string& prompt,
                                       const DecodingRegime& regime,
                                       const TrialKey& key, int n) override {
    (void)key;
    std::vector<CompletionResult> out;
    Exchange ex = post(payload(prompt, regime, n));
    for (CompletionResult& r : parse_choices(ex)) {
      if (static_cast<int>(out.size()) >= n) break;
      r.sample_index = static_cast<int>(out.size());
      out.push_back(std::move(r));
    }
    // Endpoints that ignore n>1 get topped up with sequential single calls;
    // individual failures are tolerated as long as one sample survives.
    std::optional<std::string> last_error;
    while (static_cast<int>(out.size()) < n) {
      try {
        Exchange single = post(payload(prompt, regime, 1));
        std::vector<CompletionResult> parsed = parse_choices(single);
        if (parsed.empty()) throw ParseError("no choices: " + single.body);
        parsed.front().sample_index = static_cast<int>(out.size());
        out.push_back(std::move(parsed.front()));
      } catch (const AuthError&) {
        throw;
      } catch (const Error& e) {
        last_error = e.what();
        break;
      }
    }
    if (out.empty()) {
      throw TransportError("all samples failed" +
                           (last_error ? ": " + *last_error : std::string()));
    }
    return out;
  }

 private:
  struct Exchange {
    std::string body;
    int latency_ms = 0;
    int attempt = 1;
  };

  void split_url() {
    const std::string& url = config_.base_url;
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) {
      throw ConfigError("base_url must include a scheme: " + url);
    }
    std::size_t path = url.find('/', scheme + 3);
    root_ = path == std::string::npos ? url : url.substr(0, path);
    prefix_ = path == std::string::npos ? "" : url.substr(path);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  nlohmann::json payload(const std::string& prompt,
                         const DecodingRegime& regime, int n) const {
    nlohmann::json body = {
        {"model", config_.model_id},
        {"messages",
         nlohmann::json::array(
             {nlohmann::json{{"role", "user"}, {"content", prompt}}})},
        {"temperature", regime.temperature},
    };
    // top_p rides along only when it actually constrains sampling; greedy
    // decoding sends temperature 0.0 alone.
    if (regime.temperature > 0.0 && regime.top_p < 1.0) {
      body["top_p"] = regime.top_p;
    }
    if (n > 1) body["n"] = n;
    return body;
  }

  Exchange post(const nlohmann::json& body) {
    std::string payload_str = body.dump();
    std::string last_failure;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
      auto started = std::chrono::steady_clock::now();
      httplib::Client client(root_);
      client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
      client.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
      client.set_write_timeout(std::chrono::duration<double>(config_.timeout_s));
      httplib::Headers headers;
      if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
      }
      httplib::Result res = client.Post(prefix_ + "/chat/completions", headers,
                                        payload_str, "application/json");
      auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();

      std::optional<int> server_delay_s;
      if (!res) {
        last_failure = "transport: " + httplib::to_string(res.error());
      } else if (res->status == 200) {
        Exchange ex;
        ex.body = res->body;
        ex.latency_ms = static_cast<int>(elapsed);
        ex.attempt = attempt;
        return ex;
      } else if (res->status == 401 || res->status == 403) {
        throw AuthError("authentication rejected (HTTP " +
                        std::to_string(res->status) + "): " + res->body);
      } else if (res->status == 429 || res->status == 408 ||
                 res->status >= 500) {
        last_failure = "HTTP " + std::to_string(res->status) + ": " + res->body;
        if (res->has_header("Retry-After")) {
          try {
            server_delay_s = std::stoi(res->get_header_value("Retry-After"));
          } catch (const std::exception&) {
          }
        }
      } else {
        throw TransportError("HTTP " + std::to_string(res->status) + ": " +
                             res->body);
      }

      if (attempt == config_.max_attempts) break;
      std::this_thread::sleep_for(backoff_delay(attempt, server_delay_s));
    }
    throw TransportError("request failed after " +
                         std::to_string(config_.max_attempts) +
                         " attempts; last error: " + last_failure);
  }

  std::chrono::milliseconds backoff_delay(int attempt,
                                          std::optional<int> server_delay_s) {
    if (server_delay_s) return std::chrono::seconds(*server_delay_s);
    double base = config_.backoff_base_ms * std::pow(2.0, attempt - 1);
    static thread_local SplitMix64 jitter_rng(
        static_cast<std::uint64_t>(
            std::chrono::steady_clock::now().time_since_epoch().count()) ^
        std::hash<std::thread::id>{}(std::this_thread::get_id()));
    double unit = static_cast<double>(jitter_rng.next() >> 11) /
                  static_cast<double>(1ULL << 53);  // [0, 1)
    double factor = 1.0 + config_.backoff_jitter * (2.0 * unit - 1.0);
    return std::chrono::milliseconds(
        static_cast<std::int64_t>(base * factor));
  }

  std::vector<CompletionResult> parse_choices(const Exchange& ex) const {
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(ex.body);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed completion body (") + e.what() +
                       "): " + ex.body);
    }
    if (!obj.is_object() || !obj.contains("choices") ||
        !obj["choices"].is_array()) {
      throw ParseError("completion body has no choices array: " + ex.body);
    }
    std::optional<TokenUsage> usage;
    if (obj.contains("usage") && obj["usage"].is_object()) {
      TokenUsage u;
      u.prompt_tokens = obj["usage"].value("prompt_tokens", std::int64_t{0});
      u.completion_tokens =
          obj["usage"].value("completion_tokens", std::int64_t{0});
      usage = u;
    }
    std::vector<CompletionResult> out;
    for (const nlohmann::json& choice : obj["choices"]) {
      if (!choice.is_object() || !choice.contains("message") ||
          !choice["message"].is_object() ||
          !choice["message"].contains("content") ||
          !choice["message"]["content"].is_string()) {
        throw ParseError("choice lacks message.content: " + ex.body);
      }
      CompletionResult r;
      r.text = choice["message"]["content"].get<std::string>();
      r.latency_ms = ex.latency_ms;
      r.attempt = ex.attempt;
      r.sample_index = static_cast<int>(out.size());
      r.usage = usage;
      out.push_back(std::move(r));
    }
    return out;
  }

  HttpConfig config_;
  std::string root_;    // scheme://host:port
  std::string prefix_;  // path prefix, e.g. /v1
  std::string api_key_;
};

// ---------------------------------------------------------------------------
// Beam-ish rerank: draw regime.n_samples independent completions at the
// regime's sampling parameters and keep the first (by sample index) whose
// judged verdict is correct, falling back to sample 0. With a judged-correct
// baseline on record, judged correctness and agreement with the baseline are
// the same selection key; the baseline text is accepted for completeness.

struct BeamOutcome {
  CompletionResult chosen;
  int chosen_index = 0;
  int samples = 0;
};

inline BeamOutcome beam_ish_complete(Model& model, const std::string& prompt,
                                     const DecodingRegime& regime,
                                     const Item& item,
                                     const std::string& baseline_answer,
                                     const TrialKey& key) {
  (void)baseline_answer;
  std::vector<CompletionResult> samples =
      model.sample(prompt, regime, key, regime.n_samples);
  if (samples.empty()) throw TransportError("beam-ish rerank got no samples");

  BeamOutcome out;
  out.samples = static_cast<int>(samples.size());
  for (const CompletionResult& sample : samples) {
    if (judge(sample.text, item).value == VerdictValue::correct) {
      out.chosen = sample;
      out.chosen_index = sample.sample_index;
      return out;
    }
  }
  out.chosen = samples.front();
  out.chosen_index = samples.front().sample_index;
  return out;
}

}  // namespace akrasia
