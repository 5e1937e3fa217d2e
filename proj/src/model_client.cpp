#include "fairaudit/model_client.hpp"

#include <cctype>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <nlohmann/json.hpp>

#include "fairaudit/digest.hpp"

namespace fairaudit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string preview(const std::string& raw, std::size_t limit = 80) {
  std::string out;
  for (char c : raw) {
    if (out.size() >= limit) {
      out += "...";
      break;
    }
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }

}  // namespace

Verdict parse_verdict(const std::string& raw) {
  struct Token {
    int value;
    int line;
  };
  std::vector<Token> tokens;
  int line = 0;
  std::size_t i = 0;
  while (i < raw.size() && tokens.size() < 2) {
    const unsigned char c = static_cast<unsigned char>(raw[i]);
    if (!is_alnum(c)) {
      if (c == '\n') ++line;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < raw.size() && is_alnum(static_cast<unsigned char>(raw[j]))) ++j;
    if (j - i == 1 && (raw[i] == '0' || raw[i] == '1'))
      tokens.push_back({raw[i] - '0', line});
    i = j;
  }
  if (tokens.empty())
    throw UnparseableOutputError("no standalone 0/1 token in completion: \"" +
                                 preview(raw) + "\"");
  if (tokens.size() == 2 && tokens[0].line == tokens[1].line &&
      tokens[0].value != tokens[1].value)
    throw UnparseableOutputError(
        "conflicting 0/1 tokens on the same line of completion: \"" +
        preview(raw) + "\"");
  return Verdict(tokens[0].value);
}

void BackendConfig::validate() const {
  if (max_in_flight < 1)
    throw ConfigError("max_in_flight must be >= 1, got " +
                      std::to_string(max_in_flight));
  if (retry_budget < 0)
    throw ConfigError("retry_budget must be >= 0, got " +
                      std::to_string(retry_budget));
  switch (kind) {
    case BackendKind::HttpEndpoint:
      if (url.empty()) throw ConfigError("http backend needs a url");
      if (model.empty()) throw ConfigError("http backend needs a model name");
      break;
    case BackendKind::Synthetic: {
      if (rules.empty())
        throw ConfigError("synthetic backend needs a rule table");
      if (rules.back().contains)
        throw ConfigError("synthetic rule table needs a final default rule");
      for (const auto& rule : rules) {
        if (rule.verdict != 0 && rule.verdict != 1)
          throw ConfigError("synthetic rule verdict must be 0 or 1");
      }
      if (flip_rate < 0.0 || flip_rate >= 1.0)
        throw ConfigError("synthetic flip_rate must be in [0, 1)");
      break;
    }
    case BackendKind::Replay:
      break;
  }
}

std::string BackendConfig::effective_id() const {
  if (!id.empty()) return id;
  switch (kind) {
    case BackendKind::HttpEndpoint:
      return "http:" + model + "@" + url;
    case BackendKind::Synthetic: {
      std::string material = std::to_string(seed);
      for (const auto& rule : rules) {
        material += '\x1f';
        material += rule.contains ? *rule.contains : std::string("<default>");
        material += '\x1f';
        material += std::to_string(rule.verdict);
      }
      return "synthetic:" + sha256_hex(material).substr(0, 12);
    }
    case BackendKind::Replay:
      return "replay";
  }
  return "unknown";
}

BackendConfig BackendConfig::from_json(const json& j) {
  BackendConfig c;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "http-endpoint") {
    c.kind = BackendKind::HttpEndpoint;
  } else if (kind == "synthetic") {
    c.kind = BackendKind::Synthetic;
  } else if (kind == "replay") {
    c.kind = BackendKind::Replay;
  } else {
    throw ConfigError("unknown backend kind: " + kind);
  }
  c.id = j.value("id", std::string());
  c.url = j.value("url", std::string());
  c.model = j.value("model", std::string());
  c.temperature = j.value("temperature", 0.0);
  c.max_tokens = j.value("max_tokens", 8);
  c.auth_env = j.value("auth_env", std::string());
  c.auth_header = j.value("auth_header", std::string("Authorization"));
  if (j.contains("rules")) {
    for (const auto& rj : j.at("rules")) {
      SyntheticRule rule;
      if (rj.contains("contains"))
        rule.contains = rj.at("contains").get<std::string>();
      rule.verdict = rj.at("verdict").get<int>();
      c.rules.push_back(std::move(rule));
    }
  }
  c.seed = j.value("seed", std::uint64_t{0});
  c.flip_rate = j.value("flip_rate", 0.0);
  if (j.contains("cache"))
    c.cache_path = j.at("cache").get<std::string>();
  c.max_in_flight = j.value("max_in_flight", 4);
  c.retry_budget = j.value("retry_budget", 2);
  c.fixed_timestamp = j.value("fixed_timestamp", std::string());
  c.validate();
  return c;
}

BackendConfig BackendConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open backend file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("backend file " + path + ": " + e.what());
  }
  BackendConfig c = from_json(j);
  if (!c.cache_path.empty() && c.cache_path.is_relative()) {
    c.cache_path =
        std::filesystem::path(path).parent_path() / c.cache_path;
  }
  return c;
}

Verdict synthetic_classify(const std::vector<SyntheticRule>& rules,
                           std::uint64_t seed, double flip_rate,
                           const std::string& prompt) {
  std::optional<int> verdict;
  for (const auto& rule : rules) {
    if (!rule.contains) {
      verdict = rule.verdict;
      break;
    }
    if (prompt.find(*rule.contains) != std::string::npos) {
      verdict = rule.verdict;
      break;
    }
  }
  if (!verdict)
    throw ConfigError("synthetic rule table has no matching rule");
  if (flip_rate > 0.0) {
    const std::string h =
        sha256_hex(std::to_string(seed) + ":" + prompt).substr(0, 8);
    const std::uint64_t x = std::stoull(h, nullptr, 16);
    if (static_cast<double>(x) <
        flip_rate * 4294967296.0)  // 2^32
      *verdict = 1 - *verdict;
  }
  return Verdict(*verdict);
}

ResponseCache::ResponseCache(std::filesystem::path path)
    : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      CacheEntry e;
      e.key = j.at("key").get<std::string>();
      e.prompt_digest = j.at("prompt_digest").get<std::string>();
      e.raw = j.at("raw").get<std::string>();
      e.verdict = j.at("verdict").get<int>();
      e.backend_id = j.at("backend_id").get<std::string>();
      e.timestamp = j.at("timestamp").get<std::string>();
      if (e.verdict != 0 && e.verdict != 1) throw DataError("bad verdict");
      if (by_key_.contains(e.key)) continue;  // first entry wins
      by_key_[e.key] = order_.size();
      if (!by_prompt_.contains(e.prompt_digest))
        by_prompt_[e.prompt_digest] = order_.size();
      order_.push_back(std::move(e));
    } catch (const std::exception&) {
      ++corrupt_lines_;
    }
  }
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

std::optional<CacheEntry> ResponseCache::lookup_key(
    const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = by_key_.find(key);
  if (it == by_key_.end()) return std::nullopt;
  return order_[it->second];
}

std::optional<CacheEntry> ResponseCache::lookup_prompt(
    const std::string& prompt_digest) const {
  std::lock_guard lock(mutex_);
  const auto it = by_prompt_.find(prompt_digest);
  if (it == by_prompt_.end()) return std::nullopt;
  return order_[it->second];
}

ordered_json ResponseCache::entry_to_json(const CacheEntry& entry) {
  ordered_json j;
  j["key"] = entry.key;
  j["prompt_digest"] = entry.prompt_digest;
  j["raw"] = entry.raw;
  j["verdict"] = entry.verdict;
  j["backend_id"] = entry.backend_id;
  j["timestamp"] = entry.timestamp;
  return j;
}

bool ResponseCache::insert(const CacheEntry& entry) {
  std::lock_guard lock(mutex_);
  if (by_key_.contains(entry.key)) return false;
  by_key_[entry.key] = order_.size();
  if (!by_prompt_.contains(entry.prompt_digest))
    by_prompt_[entry.prompt_digest] = order_.size();
  order_.push_back(entry);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    if (!out)
      throw DataError("cannot append to cache file: " + path_.string());
    out << entry_to_json(entry).dump() << '\n';
    out.flush();
  }
  return true;
}

std::vector<CacheEntry> ResponseCache::entries() const {
  std::lock_guard lock(mutex_);
  return order_;
}

/// Bounds concurrent backend requests to the configured in-flight limit.
class RequestGate {
 public:
  explicit RequestGate(int limit) : available_(limit) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int available_;
};

struct ModelClient::Inflight {
  std::promise<Verdict> promise;
  std::shared_future<Verdict> future;
};

ModelClient::ModelClient(BackendConfig config,
                         std::shared_ptr<ResponseCache> cache)
    : config_(std::move(config)), cache_(std::move(cache)) {
  config_.validate();
  backend_id_ = config_.effective_id();
  if (config_.fixed_timestamp.empty()) {
    clock_ = iso8601_now;
  } else {
    clock_ = [stamp = config_.fixed_timestamp] { return stamp; };
  }
  if (config_.kind == BackendKind::Replay && !cache_)
    throw ConfigError("replay backend requires a populated cache");
  if (config_.kind == BackendKind::HttpEndpoint && !config_.auth_env.empty()) {
    const char* token = std::getenv(config_.auth_env.c_str());
    if (!token || !*token)
      throw ConfigError("environment variable " + config_.auth_env +
                        " is not set (required by the http backend)");
  }
  gate_ = std::make_unique<RequestGate>(config_.max_in_flight);
}

ModelClient::~ModelClient() = default;

std::string ModelClient::cache_key(const std::string& backend_id,
                                   const std::string& prompt_text) {
  return sha256_hex(backend_id + "\n" + prompt_text);
}

Verdict ModelClient::classify(const std::string& prompt_text) {
  const std::string key = cache_key(backend_id_, prompt_text);
  if (cache_) {
    if (const auto hit = cache_->lookup_key(key)) return Verdict(hit->verdict);
  }

  if (config_.kind == BackendKind::Replay) {
    const auto hit = cache_->lookup_prompt(sha256_hex(prompt_text));
    if (!hit)
      throw ReplayMissError("replay cache has no response for prompt \"" +
                            preview(prompt_text) + "\"");
    return Verdict(hit->verdict);
  }

  // Single flight: concurrent callers for the same prompt share one request.
  std::shared_ptr<Inflight> flight;
  bool leader = false;
  {
    std::lock_guard lock(inflight_mutex_);
    const auto it = inflight_.find(key);
    if (it != inflight_.end()) {
      flight = it->second;
    } else {
      flight = std::make_shared<Inflight>();
      flight->future = flight->promise.get_future().share();
      inflight_[key] = flight;
      leader = true;
    }
  }
  if (!leader) return flight->future.get();

  try {
    const Verdict verdict = classify_uncached(prompt_text, key);
    {
      std::lock_guard lock(inflight_mutex_);
      inflight_.erase(key);
    }
    flight->promise.set_value(verdict);
    return verdict;
  } catch (...) {
    {
      std::lock_guard lock(inflight_mutex_);
      inflight_.erase(key);
    }
    flight->promise.set_exception(std::current_exception());
    throw;
  }
}

Verdict ModelClient::classify_uncached(const std::string& prompt_text,
                                       const std::string& key) {
  // The leader re-checks the cache in case an earlier call landed after the
  // caller's fast-path check.
  if (cache_) {
    if (const auto hit = cache_->lookup_key(key)) return Verdict(hit->verdict);
  }

  std::string raw;
  if (config_.kind == BackendKind::Synthetic) {
    const Verdict v = synthetic_classify(config_.rules, config_.seed,
                                         config_.flip_rate, prompt_text);
    raw = std::to_string(v.value());
  } else {
    raw = http_complete(prompt_text);
  }
  const Verdict verdict = parse_verdict(raw);
  if (cache_) {
    CacheEntry entry;
    entry.key = key;
    entry.prompt_digest = sha256_hex(prompt_text);
    entry.raw = raw;
    entry.verdict = verdict.value();
    entry.backend_id = backend_id_;
    entry.timestamp = clock_();
    cache_->insert(entry);  // persisted before returning
  }
  return verdict;
}

std::string ModelClient::http_complete(const std::string& prompt_text) {
  // scheme://host[:port] and the request path.
  const auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("backend url needs a scheme: " + config_.url);
  const auto path_start = config_.url.find('/', scheme_end + 3);
  const std::string base = path_start == std::string::npos
                               ? config_.url
                               : config_.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos
                               ? std::string("/")
                               : config_.url.substr(path_start);

  ordered_json body;
  body["model"] = config_.model;
  body["messages"] = ordered_json::array(
      {ordered_json{{"role", "user"}, {"content", prompt_text}}});
  body["temperature"] = config_.temperature;
  body["max_tokens"] = config_.max_tokens;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.auth_env.empty()) {
    const char* token = std::getenv(config_.auth_env.c_str());
    const std::string value = token ? token : "";
    if (config_.auth_header == "Authorization") {
      headers.emplace("Authorization", "Bearer " + value);
    } else {
      headers.emplace(config_.auth_header, value);
    }
  }

  gate_->acquire();
  struct GateRelease {
    RequestGate* gate;
    ~GateRelease() { gate->release(); }
  } release{gate_.get()};

  std::string last_error;
  const int attempts = 1 + config_.retry_budget;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
    httplib::Client client(base);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(120, 0);
    network_requests_.fetch_add(1);
    httplib::Result res = client.Post(path, headers, payload,
                                      "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw TransportError("backend returned status " +
                           std::to_string(res->status) + " for " + base);
    try {
      const json reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const json::exception& e) {
      throw TransportError(std::string("malformed completion response: ") +
                           e.what());
    }
  }
  throw TransportError("backend unreachable after " +
                       std::to_string(attempts) + " attempts (" + last_error +
                       "): " + base);
}

std::string iso8601_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

}  // namespace fairaudit
