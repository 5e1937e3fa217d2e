#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fairaudit/errors.hpp"

namespace fairaudit {

/// Binary classifier verdict: 0 (negative) or 1 (affirmative).
class Verdict {
 public:
  Verdict() = default;
  explicit Verdict(int value) : value_(value) {
    if (value != 0 && value != 1)
      throw DataError("verdict must be 0 or 1, got " + std::to_string(value));
  }

  int value() const { return value_; }
  Verdict flipped() const { return Verdict(1 - value_); }

  bool operator==(const Verdict&) const = default;

 private:
  int value_ = 0;
};

/// Returns the first standalone "0" or "1" token in the completion.
/// Standalone means delimited by non-alphanumeric characters or the string
/// edges. Throws UnparseableOutputError when no such token exists or when
/// the first two standalone binary tokens disagree on the same line.
Verdict parse_verdict(const std::string& raw);

/// One synthetic-backend rule: matches when the prompt contains the
/// substring; a rule without a substring is the required final default.
struct SyntheticRule {
  std::optional<std::string> contains;
  int verdict = 0;
};

enum class BackendKind { HttpEndpoint, Synthetic, Replay };

struct BackendConfig {
  BackendKind kind = BackendKind::Synthetic;
  std::string id;  // stable identifier; derived from kind when empty

  // http-endpoint
  std::string url;
  std::string model;
  double temperature = 0.0;
  int max_tokens = 8;
  std::string auth_env;  // environment variable holding the token
  std::string auth_header = "Authorization";

  // synthetic
  std::vector<SyntheticRule> rules;
  std::uint64_t seed = 0;
  double flip_rate = 0.0;  // deterministic hash-noise; 0 disables

  // replay
  std::filesystem::path cache_path;  // may also come from the CLI flag

  int max_in_flight = 4;
  int retry_budget = 2;
  std::string fixed_timestamp;  // cache timestamps; empty = wall clock

  void validate() const;
  std::string effective_id() const;

  static BackendConfig from_json(const nlohmann::json& j);
  static BackendConfig load(const std::string& path);
};

/// Deterministic first-matching-rule evaluation over the rendered prompt.
/// Pure function of (rules, seed, flip_rate, prompt).
Verdict synthetic_classify(const std::vector<SyntheticRule>& rules,
                           std::uint64_t seed, double flip_rate,
                           const std::string& prompt);

struct CacheEntry {
  std::string key;            // sha256(backend_id \n prompt)
  std::string prompt_digest;  // sha256(prompt)
  std::string raw;
  int verdict = 0;
  std::string backend_id;
  std::string timestamp;
};

/// Append-only response cache: one JSON record per line. Corrupt lines are
/// skipped with a warning count; the first entry for a key wins.
class ResponseCache {
 public:
  /// In-memory cache without a backing file.
  ResponseCache() = default;
  /// Opens (and later appends to) the given file; missing files are created
  /// on first insert.
  explicit ResponseCache(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }
  std::size_t size() const;
  std::size_t corrupt_lines() const { return corrupt_lines_; }

  std::optional<CacheEntry> lookup_key(const std::string& key) const;
  std::optional<CacheEntry> lookup_prompt(const std::string& prompt_digest) const;

  /// Appends the entry unless its key is already present. Returns true when
  /// the entry was added. Writes are serialized through one writer.
  bool insert(const CacheEntry& entry);

  /// Snapshot in insertion order (cache ls / verify / gc).
  std::vector<CacheEntry> entries() const;

  static nlohmann::ordered_json entry_to_json(const CacheEntry& entry);

 private:
  mutable std::mutex mutex_;
  std::filesystem::path path_;
  std::vector<CacheEntry> order_;
  std::unordered_map<std::string, std::size_t> by_key_;
  std::unordered_map<std::string, std::size_t> by_prompt_;
  std::size_t corrupt_lines_ = 0;
};

/// Obtains binary verdicts for rendered prompts from the configured backend,
/// with caching, bounded in-flight requests, retries, and single-flight
/// deduplication per (backend, prompt).
class ModelClient {
 public:
  ModelClient(BackendConfig config, std::shared_ptr<ResponseCache> cache);
  ~ModelClient();

  ModelClient(const ModelClient&) = delete;
  ModelClient& operator=(const ModelClient&) = delete;

  /// Classify one prompt. Safe for concurrent callers; at most one live
  /// network request per (backend, prompt); repeat calls answer from cache.
  Verdict classify(const std::string& prompt_text);

  const BackendConfig& config() const { return config_; }
  std::shared_ptr<ResponseCache> cache() const { return cache_; }

  /// Number of HTTP requests actually sent (retries included).
  std::int64_t network_requests() const { return network_requests_.load(); }

  /// Overrides the timestamp source (fixture generation).
  void set_clock(std::function<std::string()> clock) {
    clock_ = std::move(clock);
  }

  static std::string cache_key(const std::string& backend_id,
                               const std::string& prompt_text);

 private:
  struct Inflight;

  Verdict classify_uncached(const std::string& prompt_text,
                            const std::string& key);
  std::string http_complete(const std::string& prompt_text);

  BackendConfig config_;
  std::string backend_id_;
  std::shared_ptr<ResponseCache> cache_;
  std::function<std::string()> clock_;
  std::atomic<std::int64_t> network_requests_{0};

  std::mutex inflight_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Inflight>> inflight_;

  std::unique_ptr<class RequestGate> gate_;  // bounds in-flight requests
};

/// Current time as "YYYY-MM-DDThh:mm:ssZ".
std::string iso8601_now();

}  // namespace fairaudit
