#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "theseus/errors.hpp"
#include "theseus/features.hpp"
#include "theseus/hashing.hpp"

namespace theseus {

using nlohmann::json;

namespace {

template <typename Fn>
void for_each_gram(const std::string& normalized, std::size_t n_min, std::size_t n_max, Fn&& fn) {
  for (std::size_t n = n_min; n <= n_max; ++n) {
    if (normalized.size() < n) break;
    for (std::size_t i = 0; i + n <= normalized.size(); ++i) fn(std::string_view(normalized).substr(i, n));
  }
}

std::string compute_vocab_id(const NGramVocabulary& v) {
  json j = to_json(v);
  j.erase("vocab_id");
  return sha256_hex(j.dump()).substr(0, 16);
}

}  // namespace

double SparseVector::norm() const {
  double s = 0.0;
  for (double x : values) s += x * x;
  return std::sqrt(s);
}

std::vector<double> SparseVector::to_dense() const {
  std::vector<double> out(dimension, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) out[indices[i]] = values[i];
  return out;
}

SparseVector SparseVector::from_dense(std::span<const double> dense) {
  SparseVector v;
  v.dimension = dense.size();
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      v.indices.push_back(static_cast<std::uint32_t>(i));
      v.values.push_back(dense[i]);
    }
  }
  return v;
}

NGramVocabulary fit_tfidf(std::span<const std::string> train_texts, const TfidfConfig& config) {
  if (train_texts.empty()) throw FitError("fit_tfidf: empty training set");
  if (config.n_min < 1 || config.n_max < config.n_min) throw PreconditionError("fit_tfidf: invalid n-gram range");

  std::unordered_map<std::string, std::size_t> df;
  for (const auto& text : train_texts) {
    const std::string norm = normalize_whitespace_lower(text);
    std::unordered_map<std::string_view, bool> seen;
    for_each_gram(norm, config.n_min, config.n_max, [&](std::string_view g) { seen.emplace(g, true); });
    for (const auto& [g, _] : seen) ++df[std::string(g)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [g, count] : df) {
    if (count >= config.min_df) kept.emplace_back(g, count);
  }
  if (config.max_features > 0 && kept.size() > config.max_features) {
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    kept.resize(config.max_features);
  }
  std::sort(kept.begin(), kept.end());

  NGramVocabulary v;
  v.n_min = config.n_min;
  v.n_max = config.n_max;
  v.min_df = config.min_df;
  v.documents = train_texts.size();
  const double docs = static_cast<double>(train_texts.size());
  for (auto& [g, count] : kept) {
    v.index.emplace(g, static_cast<std::uint32_t>(v.grams.size()));
    v.idf.push_back(std::log((1.0 + docs) / (1.0 + static_cast<double>(count))) + 1.0);
    v.grams.push_back(std::move(g));
  }
  v.vocab_id = compute_vocab_id(v);
  return v;
}

SparseVector tfidf_vector(std::string_view text, const NGramVocabulary& vocab) {
  const std::string norm = normalize_whitespace_lower(text);
  std::map<std::uint32_t, double> tf;
  for_each_gram(norm, vocab.n_min, vocab.n_max, [&](std::string_view g) {
    if (auto it = vocab.index.find(std::string(g)); it != vocab.index.end()) tf[it->second] += 1.0;
  });
  SparseVector v;
  v.dimension = vocab.size();
  for (const auto& [idx, count] : tf) {
    v.indices.push_back(idx);
    v.values.push_back(count * vocab.idf[idx]);
  }
  const double n = v.norm();
  if (n > 0.0) {
    for (double& x : v.values) x /= n;
  }
  return v;
}

json to_json(const NGramVocabulary& v) {
  return json{{"version", 1},   {"vocab_id", v.vocab_id},   {"n_min", v.n_min}, {"n_max", v.n_max},
              {"min_df", v.min_df}, {"documents", v.documents}, {"grams", v.grams}, {"idf", v.idf}};
}

NGramVocabulary vocabulary_from_json(const json& j) {
  try {
    NGramVocabulary v;
    v.vocab_id = j.at("vocab_id").get<std::string>();
    v.n_min = j.at("n_min").get<std::size_t>();
    v.n_max = j.at("n_max").get<std::size_t>();
    v.min_df = j.at("min_df").get<std::size_t>();
    v.documents = j.at("documents").get<std::size_t>();
    v.grams = j.at("grams").get<std::vector<std::string>>();
    v.idf = j.at("idf").get<std::vector<double>>();
    if (v.grams.size() != v.idf.size()) throw SchemaError("vocabulary grams/idf length mismatch");
    for (std::size_t i = 0; i < v.grams.size(); ++i) v.index.emplace(v.grams[i], static_cast<std::uint32_t>(i));
    return v;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed vocabulary: ") + e.what());
  }
}

}  // namespace theseus
