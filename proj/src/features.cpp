#include "theseus/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "theseus/errors.hpp"
#include "theseus/hashing.hpp"

namespace theseus {

using nlohmann::json;

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

std::vector<std::string> top_k(const std::unordered_map<std::string, std::size_t>& counts, std::size_t k) {
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (items.size() > k) items.resize(k);
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [gram, _] : items) out.push_back(std::move(gram));
  return out;
}

std::string compute_schema_id(const FeatureSchema& schema) {
  json j = to_json(schema);
  j.erase("schema_id");
  return sha256_hex(j.dump()).substr(0, 16);
}

}  // namespace

std::size_t schema_dimension(std::size_t bigrams, std::size_t trigrams, std::size_t function_words,
                             std::size_t categories) {
  return kCountFeatures + kCharClassFeatures + bigrams + trigrams + kRichnessFeatures + kPunctuationSet.size() +
         closed_classes().size() + function_words + categories;
}

std::vector<FeatureBlock> FeatureSchema::blocks() const {
  std::vector<FeatureBlock> out;
  std::size_t at = 0;
  auto add = [&](std::string name, std::size_t width) {
    out.push_back({std::move(name), at, at + width});
    at += width;
  };
  add("counts", kCountFeatures);
  add("char_classes", kCharClassFeatures);
  add("char_bigrams", char_bigram_vocab.size());
  add("char_trigrams", char_trigram_vocab.size());
  add("richness", kRichnessFeatures);
  add("punctuation", kPunctuationSet.size());
  add("closed_classes", closed_classes().size());
  add("function_words", function_words.size());
  add("lexicon", lexicon.categories.size());
  return out;
}

std::vector<std::string> FeatureSchema::feature_names() const {
  std::vector<std::string> names = {"char_count", "word_count", "sentence_count", "mean_word_length",
                                    "mean_sentence_length"};
  for (char c = 'a'; c <= 'z'; ++c) names.push_back(fmt::format("letter_{}", c));
  for (char c = '0'; c <= '9'; ++c) names.push_back(fmt::format("digit_{}", c));
  for (const auto& g : char_bigram_vocab) names.push_back("bigram_" + g);
  for (const auto& g : char_trigram_vocab) names.push_back("trigram_" + g);
  names.insert(names.end(), {"type_token_ratio", "hapax_ratio", "yules_k"});
  for (char c : kPunctuationSet) names.push_back(fmt::format("punct_{}", c));
  for (const auto& cc : closed_classes()) names.push_back("class_" + std::string(cc.name));
  for (const auto& w : function_words) names.push_back("fw_" + w);
  for (const auto& c : lexicon.categories) names.push_back("lex_" + c);
  return names;
}

FeatureVector FeatureSchema::standardize(const FeatureVector& raw) const {
  if (raw.values.size() != target_dimension || mean.size() != target_dimension ||
      stddev.size() != target_dimension) {
    throw DimensionError(fmt::format("standardize: vector has {} values, schema {} expects {}", raw.values.size(),
                                     schema_id, target_dimension));
  }
  FeatureVector out{schema_id, std::vector<double>(target_dimension)};
  for (std::size_t i = 0; i < target_dimension; ++i) out.values[i] = (raw.values[i] - mean[i]) / stddev[i];
  return out;
}

std::unordered_map<std::string, std::size_t> char_ngram_counts(std::span<const std::string> words, std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& w : words) {
    if (w.size() < n) continue;
    for (std::size_t i = 0; i + n <= w.size(); ++i) ++counts[w.substr(i, n)];
  }
  return counts;
}

double yules_k(std::span<const std::string> words) {
  if (words.empty()) return 0.0;
  std::unordered_map<std::string_view, std::size_t> freq;
  for (const auto& w : words) ++freq[w];
  std::map<std::size_t, std::size_t> spectrum;  // m -> V_m
  for (const auto& [_, m] : freq) ++spectrum[m];
  double s2 = 0.0;
  for (const auto& [m, v] : spectrum) s2 += static_cast<double>(m) * static_cast<double>(m) * static_cast<double>(v);
  const double n = static_cast<double>(words.size());
  return 1e4 * (s2 - n) / (n * n);
}

FeatureVector style_vector(std::string_view text, const FeatureSchema& schema) {
  return style_vector(tokenize(text), schema);
}

FeatureVector style_vector(const TokenStream& ts, const FeatureSchema& schema) {
  const std::size_t expected = schema_dimension(schema.char_bigram_vocab.size(), schema.char_trigram_vocab.size(),
                                                schema.function_words.size(), schema.lexicon.categories.size());
  if (schema.target_dimension != expected ||
      (!schema.mean.empty() && (schema.mean.size() != expected || schema.stddev.size() != expected))) {
    throw DimensionError(fmt::format("schema {} is inconsistent: declares {} features, components give {}",
                                     schema.schema_id, schema.target_dimension, expected));
  }
  FeatureVector fv{schema.schema_id, {}};
  auto& v = fv.values;
  v.reserve(expected);

  const double chars = static_cast<double>(ts.non_space_count);
  const double words = static_cast<double>(ts.words.size());
  const double sentences = static_cast<double>(ts.sentences.size());
  std::size_t letters_in_words = 0;
  for (const auto& w : ts.words) letters_in_words += w.size();

  // counts
  v.push_back(chars);
  v.push_back(words);
  v.push_back(sentences);
  v.push_back(ratio(static_cast<double>(letters_in_words), words));
  v.push_back(ratio(words, sentences));

  // char_classes
  std::array<std::size_t, kCharClassFeatures> cls{};
  for (unsigned char c : ts.chars) {
    if (c >= 'a' && c <= 'z') ++cls[c - 'a'];
    else if (c >= 'A' && c <= 'Z') ++cls[c - 'A'];
    else if (c >= '0' && c <= '9') ++cls[26 + (c - '0')];
  }
  for (auto count : cls) v.push_back(ratio(static_cast<double>(count), chars));

  // char n-grams
  for (std::size_t n : {std::size_t{2}, std::size_t{3}}) {
    const auto counts = char_ngram_counts(ts.words, n);
    std::size_t total = 0;
    for (const auto& [_, c] : counts) total += c;
    const auto& vocab = n == 2 ? schema.char_bigram_vocab : schema.char_trigram_vocab;
    for (const auto& g : vocab) {
      auto it = counts.find(g);
      v.push_back(ratio(it == counts.end() ? 0.0 : static_cast<double>(it->second), static_cast<double>(total)));
    }
  }

  // richness
  std::unordered_map<std::string_view, std::size_t> freq;
  for (const auto& w : ts.words) ++freq[w];
  std::size_t hapax = 0;
  for (const auto& [_, c] : freq) hapax += (c == 1);
  v.push_back(ratio(static_cast<double>(freq.size()), words));
  v.push_back(ratio(static_cast<double>(hapax), words));
  v.push_back(yules_k(ts.words));

  // punctuation
  for (char p : kPunctuationSet) {
    auto it = ts.punctuation_counts.find(p);
    v.push_back(ratio(it == ts.punctuation_counts.end() ? 0.0 : static_cast<double>(it->second), chars));
  }

  // closed_classes
  for (const auto& cc : closed_classes()) {
    std::size_t hits = 0;
    for (const auto& [w, c] : freq) {
      if (std::find(cc.words.begin(), cc.words.end(), w) != cc.words.end()) hits += c;
    }
    v.push_back(ratio(static_cast<double>(hits), words));
  }

  // function_words
  for (const auto& fw : schema.function_words) {
    auto it = freq.find(fw);
    v.push_back(ratio(it == freq.end() ? 0.0 : static_cast<double>(it->second), words));
  }

  // lexicon
  std::vector<std::size_t> cat_hits(schema.lexicon.categories.size(), 0);
  for (const auto& [w, c] : freq) {
    for (std::size_t idx : lexicon_match(w, schema.lexicon)) cat_hits[idx] += c;
  }
  for (auto hits : cat_hits) v.push_back(ratio(static_cast<double>(hits), words));

  return fv;
}

FeatureSchema fit_schema(std::span<const std::string> train_texts, const FeatureConfig& config) {
  std::vector<TokenStream> streams;
  streams.reserve(train_texts.size());
  std::unordered_map<std::string, std::size_t> bigrams, trigrams;
  bool any_content = false;
  for (const auto& text : train_texts) {
    streams.push_back(tokenize(text));
    any_content = any_content || streams.back().non_space_count > 0;
    for (auto& [g, c] : char_ngram_counts(streams.back().words, 2)) bigrams[g] += c;
    for (auto& [g, c] : char_ngram_counts(streams.back().words, 3)) trigrams[g] += c;
  }
  if (!any_content) throw SchemaError("fit_schema: training text is empty");

  std::unordered_set<std::string> seen;
  FeatureSchema schema;
  for (const auto& w : config.function_words) {
    const std::string lw = to_lower(w);
    if (seen.insert(lw).second) schema.function_words.push_back(lw);
  }
  schema.char_bigram_vocab = top_k(bigrams, config.bigram_k);
  schema.char_trigram_vocab = top_k(trigrams, config.trigram_k);
  schema.lexicon = config.lexicon;
  schema.target_dimension = schema_dimension(schema.char_bigram_vocab.size(), schema.char_trigram_vocab.size(),
                                             schema.function_words.size(), schema.lexicon.categories.size());

  const std::size_t d = schema.target_dimension;
  std::vector<double> sum(d, 0.0), sum_sq(d, 0.0);
  std::vector<std::vector<double>> rows;
  rows.reserve(streams.size());
  for (const auto& ts : streams) rows.push_back(style_vector(ts, schema).values);
  schema.mean.assign(d, 0.0);
  schema.stddev.assign(d, 1.0);
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < d; ++i) schema.mean[i] += r[i] / n;
  }
  if (rows.size() > 1) {
    for (std::size_t i = 0; i < d; ++i) {
      double ss = 0.0;
      for (const auto& r : rows) ss += (r[i] - schema.mean[i]) * (r[i] - schema.mean[i]);
      const double sd = std::sqrt(ss / (n - 1.0));
      schema.stddev[i] = sd > 1e-12 ? sd : 1.0;
    }
  }
  schema.schema_id = compute_schema_id(schema);
  return schema;
}

FeatureSchema fit_schema(const Corpus& train_corpus, const FeatureConfig& config) {
  if (train_corpus.empty()) throw SchemaError("fit_schema: training corpus is empty");
  std::vector<std::string> texts;
  texts.reserve(train_corpus.size());
  for (const auto& d : train_corpus) texts.push_back(d.text);
  return fit_schema(texts, config);
}

json to_json(const FeatureSchema& s) {
  json lex;
  lex["categories"] = s.lexicon.categories;
  lex["exact"] = s.lexicon.exact;
  lex["prefixes"] = s.lexicon.prefixes;
  return json{{"version", 1},
              {"schema_id", s.schema_id},
              {"char_bigram_vocab", s.char_bigram_vocab},
              {"char_trigram_vocab", s.char_trigram_vocab},
              {"function_words", s.function_words},
              {"lexicon", lex},
              {"target_dimension", s.target_dimension},
              {"pos_substitute", "closed-class word lists"},
              {"mean", s.mean},
              {"stddev", s.stddev}};
}

FeatureSchema schema_from_json(const json& j) {
  try {
    FeatureSchema s;
    s.schema_id = j.at("schema_id").get<std::string>();
    s.char_bigram_vocab = j.at("char_bigram_vocab").get<std::vector<std::string>>();
    s.char_trigram_vocab = j.at("char_trigram_vocab").get<std::vector<std::string>>();
    s.function_words = j.at("function_words").get<std::vector<std::string>>();
    const auto& lex = j.at("lexicon");
    s.lexicon.categories = lex.at("categories").get<std::vector<std::string>>();
    s.lexicon.exact = lex.at("exact").get<std::map<std::string, std::vector<std::size_t>>>();
    s.lexicon.prefixes = lex.at("prefixes").get<std::map<std::string, std::vector<std::size_t>>>();
    s.target_dimension = j.at("target_dimension").get<std::size_t>();
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("stddev").get<std::vector<double>>();
    if (compute_schema_id(s) != s.schema_id) throw SchemaError("schema_id does not match schema contents");
    return s;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema: ") + e.what());
  }
}

void write_feature_csv(std::ostream& out, std::span<const std::string> doc_ids,
                       std::span<const FeatureVector> vectors) {
  if (doc_ids.size() != vectors.size()) throw DimensionError("write_feature_csv: ids and vectors differ in length");
  const std::size_t d = vectors.empty() ? 0 : vectors.front().dimension();
  out << "doc_id,schema_id";
  for (std::size_t i = 0; i < d; ++i) out << ",f_" << i;
  out << '\n';
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    if (vectors[r].dimension() != d) throw DimensionError("write_feature_csv: ragged vectors");
    out << doc_ids[r] << ',' << vectors[r].schema_id;
    for (double x : vectors[r].values) out << ',' << fmt::format("{:.17g}", x);
    out << '\n';
  }
}

}  // namespace theseus
