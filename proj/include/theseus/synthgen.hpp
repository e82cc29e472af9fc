#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "theseus/corpus.hpp"
#include "theseus/lexicon.hpp"

namespace theseus {

struct SentenceLengthDist {
  double mean = 14.0;
  double stddev = 4.0;  // truncated at 3 words
};

/// Generator of texts in one controllable style.
struct SyntheticAuthorProfile {
  std::string name;
  std::vector<std::string> function_words;
  std::vector<double> function_word_dist;  // parallel to function_words
  double function_word_share = 0.5;        // chance that a word slot holds a function word
  SentenceLengthDist sentence_length;
  std::map<std::string, double> end_punctuation;       // ".", "!", "?" -> probability
  std::map<std::string, double> interior_punctuation;  // "," ";" ":" -> chance after a word
  std::map<std::string, std::vector<std::string>> content_vocab;  // topic -> word pool
  std::map<std::string, double> topic_mixture;
  std::uint64_t seed = 0;
};

/// Throws ValidationError unless every distribution sums to 1 (within 1e-9),
/// the lists are parallel and every topic pool is nonempty.
void validate_profile(const SyntheticAuthorProfile& profile);

/// The fixed function-word list the generator draws from (a subset of the
/// default feature list).
std::span<const std::string> synthetic_function_words();

/// Topic drawn for a source key. Depends only on the key and the mixture, so
/// every profile sharing a mixture writes about the same topic.
std::string topic_for(const SyntheticAuthorProfile& profile, std::string_view source_key);

/// Whole sentences until at least `words` words; deterministic per
/// (profile, source_key, words). Throws PreconditionError for words < 20.
std::string generate_text(const SyntheticAuthorProfile& profile, std::string_view source_key, std::size_t words);
Document generate_document(const SyntheticAuthorProfile& profile, std::string_view source_key, std::size_t words,
                           std::string_view dataset = "synthetic");

struct SeparationOptions {
  std::size_t topics = 12;
  std::size_t words_per_topic = 24;
  double base_sentence_mean = 10.0;
  double sentence_stddev = 3.0;
};

/// k profiles sharing topics and content vocabulary. Profile i puts extra mass
/// a >= delta on its own disjoint block of function words, so every pair is at
/// total-variation distance >= delta; sentence-length means are 5 * delta apart.
/// Throws PreconditionError for k < 2 or delta <= 0 and FeasibilityError when
/// delta > 1 or k exceeds the function-word list.
std::vector<SyntheticAuthorProfile> separated_profiles(std::size_t k, double delta, std::uint64_t seed,
                                                       const SeparationOptions& options = {});

double total_variation(std::span<const double> p, std::span<const double> q);

/// Every content word maps to the other words of its topic pool.
SynonymLexicon topic_synonyms(const SyntheticAuthorProfile& profile);

/// One original per (profile, source key) with keys "<prefix>0000", ...
/// Document ids are "<dataset>/<author>/<key>".
Corpus generate_corpus(std::span<const SyntheticAuthorProfile> profiles, std::size_t sources, std::size_t words,
                       std::string_view dataset = "synthetic", std::string_view key_prefix = "s");

nlohmann::json to_json(const SyntheticAuthorProfile& profile);
SyntheticAuthorProfile profile_from_json(const nlohmann::json& j);

}  // namespace theseus
