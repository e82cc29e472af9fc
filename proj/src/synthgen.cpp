#include "theseus/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "theseus/errors.hpp"
#include "theseus/hashing.hpp"
#include "theseus/text.hpp"

namespace theseus {

using nlohmann::json;

namespace {

const std::vector<std::string>& synthetic_word_list() {
  static const std::vector<std::string> words = {
      "the",   "a",    "an",    "of",    "to",    "in",    "and",   "but",   "or",     "for",
      "with",  "on",   "at",    "by",    "from",  "as",    "that",  "this",  "these",  "those",
      "it",    "they", "we",    "he",    "she",   "is",    "was",   "are",   "were",   "be",
      "not",   "very", "so",    "then",  "there", "which", "while", "upon",  "thus",   "however"};
  return words;
}

const char* const kConsonants = "bdfgklmnprstvz";
const char* const kVowels = "aeiou";

double sum_values(const std::map<std::string, double>& m) {
  double s = 0.0;
  for (const auto& [_, v] : m) s += v;
  return s;
}

template <typename Rng>
std::string syllables(Rng& rng, std::size_t pairs) {
  std::uniform_int_distribution<int> c(0, 13), v(0, 4);
  std::string out;
  for (std::size_t i = 0; i < pairs; ++i) {
    out += kConsonants[c(rng)];
    out += kVowels[v(rng)];
  }
  return out;
}

template <typename Rng>
std::string pick_weighted(Rng& rng, const std::map<std::string, double>& weights) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng) * sum_values(weights);
  for (const auto& [k, w] : weights) {
    if (x < w) return k;
    x -= w;
  }
  return weights.rbegin()->first;
}

}  // namespace

std::span<const std::string> synthetic_function_words() { return synthetic_word_list(); }

void validate_profile(const SyntheticAuthorProfile& p) {
  auto fail = [&](const std::string& what) { throw ValidationError("profile " + p.name + ": " + what); };
  if (p.function_words.empty() || p.function_words.size() != p.function_word_dist.size()) {
    fail("function_words and function_word_dist must be nonempty and parallel");
  }
  const double fw = std::accumulate(p.function_word_dist.begin(), p.function_word_dist.end(), 0.0);
  if (std::fabs(fw - 1.0) > 1e-9) fail(fmt::format("function_word_dist sums to {}", fw));
  for (double x : p.function_word_dist) {
    if (x < 0.0) fail("negative function-word probability");
  }
  if (p.function_word_share < 0.0 || p.function_word_share > 1.0) fail("function_word_share outside [0, 1]");
  if (!(p.sentence_length.mean > 0.0) || p.sentence_length.stddev < 0.0) fail("invalid sentence length distribution");
  if (p.end_punctuation.empty() || std::fabs(sum_values(p.end_punctuation) - 1.0) > 1e-9) {
    fail("end_punctuation must sum to 1");
  }
  for (const auto& [mark, r] : p.interior_punctuation) {
    if (r < 0.0 || r > 1.0) fail("interior punctuation rate for '" + mark + "' outside [0, 1]");
  }
  if (p.topic_mixture.empty() || std::fabs(sum_values(p.topic_mixture) - 1.0) > 1e-9) {
    fail("topic_mixture must sum to 1");
  }
  for (const auto& [topic, _] : p.topic_mixture) {
    auto it = p.content_vocab.find(topic);
    if (it == p.content_vocab.end() || it->second.empty()) fail("topic '" + topic + "' has no content words");
  }
}

std::string topic_for(const SyntheticAuthorProfile& profile, std::string_view source_key) {
  if (profile.topic_mixture.empty()) throw ValidationError("profile " + profile.name + " has no topics");
  std::mt19937_64 rng(combine_seeds({fnv1a64(source_key), 0x70b1c}));
  return pick_weighted(rng, profile.topic_mixture);
}

std::string generate_text(const SyntheticAuthorProfile& p, std::string_view source_key, std::size_t words) {
  if (words < 20) throw PreconditionError("generate_text: need at least 20 words");
  validate_profile(p);
  std::mt19937_64 rng(combine_seeds({p.seed, fnv1a64(p.name), fnv1a64(source_key), words}));
  const auto& pool = p.content_vocab.at(topic_for(p, source_key));
  std::discrete_distribution<std::size_t> fw(p.function_word_dist.begin(), p.function_word_dist.end());
  std::uniform_int_distribution<std::size_t> cw(0, pool.size() - 1);
  std::normal_distribution<double> len(p.sentence_length.mean, p.sentence_length.stddev);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::string text;
  std::size_t total = 0;
  while (total < words) {
    long length = 3;
    for (int tries = 0; tries < 100; ++tries) {
      const long l = std::lround(len(rng));
      if (l >= 3) {
        length = l;
        break;
      }
    }
    std::string sentence;
    for (long i = 0; i < length; ++i) {
      std::string w = u(rng) < p.function_word_share ? p.function_words[fw(rng)] : pool[cw(rng)];
      if (i == 0) w = match_case("X", w);
      if (i > 0) sentence += ' ';
      sentence += w;
      if (i + 1 < length) {
        for (const auto& [mark, rate] : p.interior_punctuation) {
          if (u(rng) < rate) {
            sentence += mark;
            break;
          }
        }
      }
    }
    sentence += pick_weighted(rng, p.end_punctuation);
    if (!text.empty()) text += ' ';
    text += sentence;
    total += static_cast<std::size_t>(length);
  }
  return text;
}

Document generate_document(const SyntheticAuthorProfile& profile, std::string_view source_key, std::size_t words,
                           std::string_view dataset) {
  return make_original(fmt::format("{}/{}/{}", dataset, profile.name, source_key), std::string(dataset), profile.name,
                       std::string(source_key), generate_text(profile, source_key, words));
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionError("total_variation: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
  return 0.5 * s;
}

std::vector<SyntheticAuthorProfile> separated_profiles(std::size_t k, double delta, std::uint64_t seed,
                                                       const SeparationOptions& options) {
  if (k < 2) throw PreconditionError("separated_profiles: need k >= 2");
  if (!(delta > 0.0)) throw PreconditionError("separated_profiles: delta must be positive");
  const std::size_t m = synthetic_word_list().size();
  if (delta > 1.0) throw FeasibilityError(fmt::format("separated_profiles: total variation {} exceeds 1", delta));
  if (k > m) {
    throw FeasibilityError(fmt::format("separated_profiles: {} profiles need disjoint blocks of {} function words", k, m));
  }
  if (options.topics == 0 || options.words_per_topic == 0) throw PreconditionError("separated_profiles: empty vocabulary");

  // Shared topics of pseudo-words; every word of a topic starts with the topic root.
  std::mt19937_64 vocab_rng(combine_seeds({seed, 0xc0a7e47}));
  std::map<std::string, std::vector<std::string>> vocab;
  std::map<std::string, double> mixture;
  std::set<std::string> used;
  for (std::size_t t = 0; t < options.topics; ++t) {
    std::string root;
    do root = syllables(vocab_rng, 2);
    while (!used.insert(root).second);
    std::vector<std::string> pool;
    std::set<std::string> words;
    while (pool.size() < options.words_per_topic) {
      std::string w = root + syllables(vocab_rng, 1) + kConsonants[vocab_rng() % 14];
      if (words.insert(w).second) pool.push_back(std::move(w));
    }
    const std::string topic = fmt::format("topic{:02}", t);
    vocab.emplace(topic, std::move(pool));
    mixture.emplace(topic, 1.0 / static_cast<double>(options.topics));
  }
  // Make the mixture sum to exactly 1.
  mixture.begin()->second += 1.0 - sum_values(mixture);

  const double a = std::min(1.0, delta * (1.0 + 1e-9));
  const std::size_t block = m / k;
  std::vector<SyntheticAuthorProfile> out;
  for (std::size_t i = 0; i < k; ++i) {
    SyntheticAuthorProfile p;
    p.name = fmt::format("author{}", i);
    p.function_words = synthetic_word_list();
    p.function_word_dist.assign(m, (1.0 - a) / static_cast<double>(m));
    for (std::size_t j = i * block; j < (i + 1) * block; ++j) p.function_word_dist[j] += a / static_cast<double>(block);
    const double s = std::accumulate(p.function_word_dist.begin(), p.function_word_dist.end(), 0.0);
    for (double& x : p.function_word_dist) x /= s;
    p.sentence_length = {options.base_sentence_mean + 5.0 * delta * static_cast<double>(i), options.sentence_stddev};
    p.end_punctuation = {{".", 0.8}, {"?", 0.12}, {"!", 0.08}};
    p.interior_punctuation = {{",", 0.08}, {";", 0.01}};
    p.content_vocab = vocab;
    p.topic_mixture = mixture;
    p.seed = combine_seeds({seed, i});
    out.push_back(std::move(p));
  }
  return out;
}

SynonymLexicon topic_synonyms(const SyntheticAuthorProfile& profile) {
  SynonymLexicon lex;
  for (const auto& [_, pool] : profile.content_vocab) {
    for (const auto& w : pool) {
      auto& syns = lex.entries[w];
      for (const auto& s : pool) {
        if (s != w) syns.push_back(s);
      }
      if (syns.empty()) lex.entries.erase(w);
    }
  }
  return lex;
}

Corpus generate_corpus(std::span<const SyntheticAuthorProfile> profiles, std::size_t sources, std::size_t words,
                       std::string_view dataset, std::string_view key_prefix) {
  std::vector<Document> docs;
  docs.reserve(profiles.size() * sources);
  for (std::size_t s = 0; s < sources; ++s) {
    const std::string key = fmt::format("{}{:04}", key_prefix, s);
    for (const auto& p : profiles) docs.push_back(generate_document(p, key, words, dataset));
  }
  return Corpus(std::move(docs));
}

json to_json(const SyntheticAuthorProfile& p) {
  return json{{"name", p.name},
              {"function_words", p.function_words},
              {"function_word_dist", p.function_word_dist},
              {"function_word_share", p.function_word_share},
              {"sentence_length", {{"mean", p.sentence_length.mean}, {"stddev", p.sentence_length.stddev}}},
              {"end_punctuation", p.end_punctuation},
              {"interior_punctuation", p.interior_punctuation},
              {"content_vocab", p.content_vocab},
              {"topic_mixture", p.topic_mixture},
              {"seed", p.seed}};
}

SyntheticAuthorProfile profile_from_json(const json& j) {
  try {
    SyntheticAuthorProfile p;
    p.name = j.at("name").get<std::string>();
    p.function_words = j.at("function_words").get<std::vector<std::string>>();
    p.function_word_dist = j.at("function_word_dist").get<std::vector<double>>();
    p.function_word_share = j.value("function_word_share", 0.5);
    p.sentence_length = {j.at("sentence_length").at("mean").get<double>(),
                         j.at("sentence_length").at("stddev").get<double>()};
    p.end_punctuation = j.at("end_punctuation").get<std::map<std::string, double>>();
    p.interior_punctuation = j.value("interior_punctuation", std::map<std::string, double>{});
    p.content_vocab = j.at("content_vocab").get<std::map<std::string, std::vector<std::string>>>();
    p.topic_mixture = j.at("topic_mixture").get<std::map<std::string, double>>();
    p.seed = j.value("seed", std::uint64_t{0});
    validate_profile(p);
    return p;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed profile: ") + e.what());
  }
}

}  // namespace theseus
