#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "theseus/corpus.hpp"
#include "theseus/stats.hpp"
#include "theseus/transport.hpp"

namespace theseus {

enum class EmbeddingKind { ExternalAPI, LocalHash };

std::string to_string(EmbeddingKind kind);
EmbeddingKind parse_embedding_kind(std::string_view name);

struct EmbeddingConfig {
  EmbeddingKind kind = EmbeddingKind::LocalHash;
  // LocalHash
  std::size_t dimension = 1024;
  std::size_t n_min = 3;
  std::size_t n_max = 5;
  // ExternalAPI
  std::string model_name = "text-embedding-ada-002";
  std::string endpoint = "https://api.openai.com/v1/embeddings";
  std::string api_key_env = "THESEUS_EMBED_API_KEY";
  std::optional<std::filesystem::path> cache_dir;
  double requests_per_second = 5.0;
  RetryPolicy retry;
  std::size_t max_tokens = 8191;
};

/// Text -> unit-norm (or zero) vector. External responses are memoized and,
/// with a cache directory, persisted as {model_name, text_sha256, vector}.
class EmbeddingProvider {
 public:
  explicit EmbeddingProvider(EmbeddingConfig config = {}, std::shared_ptr<Transport> transport = nullptr,
                             SleepFn sleep = {});

  std::vector<double> embed(std::string_view text);

  EmbeddingKind kind() const noexcept { return config_.kind; }
  const std::string& model_name() const noexcept { return config_.model_name; }
  /// Fixed for LocalHash; for ExternalAPI, known after the first vector (0 before).
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t network_calls() const;
  std::size_t truncations() const noexcept { return truncations_; }

 private:
  std::vector<double> fetch(std::string_view text);

  EmbeddingConfig config_;
  std::shared_ptr<Transport> transport_;
  std::unique_ptr<JsonCache> cache_;
  std::unique_ptr<RateLimiter> limiter_;
  SleepFn sleep_;
  std::size_t dimension_ = 0;
  std::size_t truncations_ = 0;
  std::unordered_map<std::string, std::vector<double>> memo_;
  std::mutex mutex_;
};

/// Character n-grams of the whitespace-normalized lowercase text, signed-hashed
/// into `dimension` buckets and L2-normalized. Empty text gives the zero vector.
/// Throws PreconditionError for dimension < 64.
std::vector<double> local_hash_embed(std::string_view text, std::size_t dimension = 1024, std::size_t n_min = 3,
                                     std::size_t n_max = 5);

/// Sentence BLEU over lowercase word tokens: geometric mean of clipped n-gram
/// precisions for n = 1..max_n times the brevity penalty. Orders for which the
/// candidate has no n-grams are left out; a zero precision counts as 1e-9.
/// An empty candidate scores 0.
double bleu(std::string_view candidate, std::string_view reference, int max_n = 4);

struct ContentCorrelation {
  double pearson_r = 0.0;
  double p_value = 1.0;
  std::size_t pairs = 0;
};

/// Pearson correlation between embedding cosine and BLEU over every
/// (T^n, T^0) pair with n >= 1. Requires at least 3 chains.
ContentCorrelation content_metric_correlation(std::span<const ParaphraseChain> chains, EmbeddingProvider& provider);

}  // namespace theseus
