#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "theseus/corpus.hpp"
#include "theseus/lexicon.hpp"
#include "theseus/text.hpp"

namespace theseus {

struct FeatureVector {
  std::string schema_id;
  std::vector<double> values;

  std::size_t dimension() const noexcept { return values.size(); }
  bool operator==(const FeatureVector&) const = default;
};

struct FeatureConfig {
  std::size_t bigram_k = 50;
  std::size_t trigram_k = 50;
  std::vector<std::string> function_words{default_function_words().begin(), default_function_words().end()};
  CategoryLexicon lexicon = demo_lexicon();
};

/// Fixed-position features shared by every schema.
inline constexpr std::size_t kCountFeatures = 5;    // chars, words, sentences, mean word len, mean sentence len
inline constexpr std::size_t kCharClassFeatures = 36;  // a-z, 0-9
inline constexpr std::size_t kRichnessFeatures = 3;    // type-token ratio, hapax ratio, Yule's K
inline constexpr std::string_view kPunctuationSet = ".,;:!?\"'-()";

/// Named contiguous range of a style vector.
struct FeatureBlock {
  std::string name;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Fitted, frozen description of a style vector.
///
/// Layout, in order:
///   counts          char count (non-whitespace), word count, sentence count,
///                   mean word length, mean sentence length in words
///   char_classes    relative frequency of a-z and 0-9 over characters
///   char_bigrams    relative frequency of each vocabulary bigram over all
///   char_trigrams   within-word character n-grams of that order
///   richness        type-token ratio, hapax-legomena ratio, Yule's K
///   punctuation     frequency of each kPunctuationSet mark over characters
///   closed_classes  determiner/preposition/pronoun/conjunction/auxiliary
///                   rates over words (stand-in for POS-tag features)
///   function_words  frequency of each function word over words
///   lexicon         share of words matching each lexicon category
/// Every ratio is 0 when its denominator is 0.
struct FeatureSchema {
  std::string schema_id;
  std::vector<std::string> char_bigram_vocab;
  std::vector<std::string> char_trigram_vocab;
  std::vector<std::string> function_words;
  CategoryLexicon lexicon;
  std::size_t target_dimension = 0;
  std::vector<double> mean;    // standardization, fitted on training vectors
  std::vector<double> stddev;  // zero-variance features get 1

  std::size_t dimension() const noexcept { return target_dimension; }
  std::vector<FeatureBlock> blocks() const;
  std::vector<std::string> feature_names() const;

  /// (x - mean) / stddev, element-wise. Throws DimensionError on mismatch.
  FeatureVector standardize(const FeatureVector& raw) const;
};

std::size_t schema_dimension(std::size_t bigrams, std::size_t trigrams, std::size_t function_words,
                             std::size_t categories);

/// Fits vocabularies (top-K within-word character bigrams/trigrams, ties
/// broken lexicographically) and standardization statistics over the texts.
/// Throws SchemaError when the training text is empty.
FeatureSchema fit_schema(std::span<const std::string> train_texts, const FeatureConfig& config);
FeatureSchema fit_schema(const Corpus& train_corpus, const FeatureConfig& config);

/// Raw (unstandardized) style vector.
FeatureVector style_vector(std::string_view text, const FeatureSchema& schema);
FeatureVector style_vector(const TokenStream& tokens, const FeatureSchema& schema);

/// Yule's K = 1e4 * (sum_m m^2 V_m - N) / N^2; 0 for N = 0.
double yules_k(std::span<const std::string> words);

/// Within-word character n-gram counts over lowercased word tokens.
std::unordered_map<std::string, std::size_t> char_ngram_counts(std::span<const std::string> words, std::size_t n);

nlohmann::json to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);

/// CSV with header `doc_id,schema_id,f_0,...,f_{d-1}`.
void write_feature_csv(std::ostream& out, std::span<const std::string> doc_ids, std::span<const FeatureVector> vectors);

// ---------------------------------------------------------------------------
// TF-IDF over raw character n-grams (spaces included).

struct SparseVector {
  std::size_t dimension = 0;
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;

  std::size_t nnz() const noexcept { return indices.size(); }
  double norm() const;
  std::vector<double> to_dense() const;
  static SparseVector from_dense(std::span<const double> dense);
};

struct TfidfConfig {
  std::size_t n_min = 2;
  std::size_t n_max = 5;
  std::size_t min_df = 2;
  std::size_t max_features = 0;  // 0 keeps every gram passing min_df
};

struct NGramVocabulary {
  std::string vocab_id;
  std::size_t n_min = 2;
  std::size_t n_max = 5;
  std::size_t min_df = 2;
  std::size_t documents = 0;
  std::vector<std::string> grams;  // sorted
  std::vector<double> idf;
  std::unordered_map<std::string, std::uint32_t> index;

  std::size_t size() const noexcept { return grams.size(); }
};

/// idf = ln((1 + D) / (1 + df)) + 1 over grams with df >= min_df.
NGramVocabulary fit_tfidf(std::span<const std::string> train_texts, const TfidfConfig& config);

/// tf * idf with raw counts, L2-normalized; all-zero when no gram is known.
SparseVector tfidf_vector(std::string_view text, const NGramVocabulary& vocab);

nlohmann::json to_json(const NGramVocabulary& vocab);
NGramVocabulary vocabulary_from_json(const nlohmann::json& j);

}  // namespace theseus
