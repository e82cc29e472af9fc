#include "theseus/contentsim.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "theseus/errors.hpp"
#include "theseus/hashing.hpp"
#include "theseus/stylemodel.hpp"
#include "theseus/text.hpp"

namespace theseus {

using nlohmann::json;

namespace {

constexpr std::uint64_t kHashSeed = 0x7e5eu;

void normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  if (s > 0.0) {
    const double n = std::sqrt(s);
    for (double& x : v) x /= n;
  }
}

// Cut at a UTF-8 boundary.
std::string_view truncate_utf8(std::string_view text, std::size_t max_bytes) {
  if (text.size() <= max_bytes) return text;
  std::size_t end = max_bytes;
  while (end > 0 && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) --end;
  return text.substr(0, end);
}

}  // namespace

std::string to_string(EmbeddingKind kind) { return kind == EmbeddingKind::LocalHash ? "local-hash" : "external"; }

EmbeddingKind parse_embedding_kind(std::string_view name) {
  if (name == "local-hash" || name == "local") return EmbeddingKind::LocalHash;
  if (name == "external" || name == "api") return EmbeddingKind::ExternalAPI;
  throw ConfigError("unknown embedding kind '" + std::string(name) + "'");
}

std::vector<double> local_hash_embed(std::string_view text, std::size_t dimension, std::size_t n_min,
                                     std::size_t n_max) {
  if (dimension < 64) throw PreconditionError("local_hash_embed: dimension must be at least 64");
  if (n_min < 1 || n_max < n_min) throw PreconditionError("local_hash_embed: invalid n-gram range");
  std::vector<double> v(dimension, 0.0);
  const std::string norm = normalize_whitespace_lower(text);
  for (std::size_t n = n_min; n <= n_max && n <= norm.size(); ++n) {
    for (std::size_t i = 0; i + n <= norm.size(); ++i) {
      const std::uint64_t h = mix64(fnv1a64(std::string_view(norm).substr(i, n)) ^ kHashSeed);
      v[h % dimension] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  normalize(v);
  return v;
}

EmbeddingProvider::EmbeddingProvider(EmbeddingConfig config, std::shared_ptr<Transport> transport, SleepFn sleep)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
  if (config_.kind == EmbeddingKind::LocalHash) {
    if (config_.dimension < 64) throw ConfigError("local-hash embedding dimension must be at least 64");
    dimension_ = config_.dimension;
    return;
  }
  if (config_.cache_dir) cache_ = std::make_unique<JsonCache>(*config_.cache_dir);
  limiter_ = std::make_unique<RateLimiter>(config_.requests_per_second, sleep_);
}

std::size_t EmbeddingProvider::network_calls() const { return transport_ ? transport_->calls() : 0; }

std::vector<double> EmbeddingProvider::embed(std::string_view text) {
  if (config_.kind == EmbeddingKind::LocalHash) {
    return local_hash_embed(text, config_.dimension, config_.n_min, config_.n_max);
  }
  std::lock_guard lock(mutex_);
  const std::string key = sha256_hex(config_.model_name + '\n' + std::string(text));
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  if (cache_) {
    if (auto rec = cache_->get(key)) {
      try {
        if (rec->at("model_name") == config_.model_name && rec->at("text_sha256") == sha256_hex(text)) {
          auto v = rec->at("vector").get<std::vector<double>>();
          dimension_ = v.size();
          return memo_.emplace(key, std::move(v)).first->second;
        }
      } catch (const json::exception&) {
        spdlog::warn("ignoring malformed embedding cache record {}", key);
      }
    }
  }
  auto v = fetch(text);
  if (dimension_ != 0 && v.size() != dimension_) {
    throw InvalidResponseError(fmt::format("embedding dimension changed from {} to {}", dimension_, v.size()));
  }
  dimension_ = v.size();
  if (cache_) {
    cache_->put(key, json{{"model_name", config_.model_name}, {"text_sha256", sha256_hex(text)}, {"vector", v}});
  }
  return memo_.emplace(key, std::move(v)).first->second;
}

std::vector<double> EmbeddingProvider::fetch(std::string_view text) {
  const auto api_key = env_value(config_.api_key_env);
  if (!api_key) throw ProviderError("embedding provider needs credentials in $" + config_.api_key_env);
  if (!transport_) transport_ = make_http_transport();

  // About 4 bytes per token.
  const std::size_t max_bytes = config_.max_tokens * 4;
  std::string_view input = text;
  if (text.size() > max_bytes) {
    input = truncate_utf8(text, max_bytes);
    ++truncations_;
    spdlog::warn("embedding input of {} bytes truncated to {} bytes (token limit {})", text.size(), input.size(),
                 config_.max_tokens);
  }
  HttpRequest req;
  req.url = config_.endpoint;
  req.body = json{{"model", config_.model_name}, {"input", std::string(input)}}.dump();
  req.headers = {{"Authorization", "Bearer " + *api_key}};
  const auto resp = post_with_retry(*transport_, req, *limiter_, config_.retry, sleep_);
  if (resp.status != 200) {
    throw ProviderError(fmt::format("embedding request failed: {}",
                                    resp.status ? fmt::format("HTTP {} {}", resp.status, resp.body.substr(0, 200))
                                                : resp.error));
  }
  try {
    auto v = json::parse(resp.body).at("data").at(0).at("embedding").get<std::vector<double>>();
    if (v.empty()) throw InvalidResponseError("empty embedding in response");
    normalize(v);
    return v;
  } catch (const json::exception& e) {
    throw InvalidResponseError(std::string("malformed embedding response: ") + e.what());
  }
}

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
  if (max_n < 1) throw PreconditionError("bleu: max_n must be at least 1");
  const auto cand = tokenize(candidate).words;
  const auto ref = tokenize(reference).words;
  if (cand.empty()) return 0.0;
  constexpr double kEpsilon = 1e-9;

  auto grams = [](const std::vector<std::string>& words, std::size_t n) {
    std::map<std::vector<std::string>, int> out;
    for (std::size_t i = 0; i + n <= words.size(); ++i) ++out[{words.begin() + i, words.begin() + i + n}];
    return out;
  };
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    const auto un = static_cast<std::size_t>(n);
    if (cand.size() < un) break;
    const auto cg = grams(cand, un);
    const auto rg = grams(ref, un);
    int clipped = 0;
    for (const auto& [g, c] : cg) {
      if (auto it = rg.find(g); it != rg.end()) clipped += std::min(c, it->second);
    }
    const double total = static_cast<double>(cand.size() - un + 1);
    const double p = clipped > 0 ? clipped / total : kEpsilon;
    log_sum += std::log(p);
    ++orders;
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return std::clamp(bp * std::exp(log_sum / orders), 0.0, 1.0);
}

ContentCorrelation content_metric_correlation(std::span<const ParaphraseChain> chains, EmbeddingProvider& provider) {
  if (chains.size() < 3) throw PreconditionError("content_metric_correlation: need at least 3 chains");
  std::vector<double> cosines;
  std::vector<double> bleus;
  for (const auto& chain : chains) {
    const auto& t0 = chain.original();
    const auto base = provider.embed(t0.text);
    for (std::size_t n = 1; n < chain.documents.size(); ++n) {
      const auto& tn = chain.documents[n];
      cosines.push_back(cosine_similarity(provider.embed(tn.text), base));
      bleus.push_back(bleu(tn.text, t0.text));
    }
  }
  if (cosines.size() < 3) throw PreconditionError("content_metric_correlation: need at least 3 paraphrase pairs");
  const auto res = pearson(cosines, bleus);
  return {res.statistic, res.p_value, cosines.size()};
}

}  // namespace theseus
