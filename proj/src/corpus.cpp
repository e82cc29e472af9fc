#include "theseus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "theseus/errors.hpp"
#include "theseus/hashing.hpp"
#include "theseus/text.hpp"

namespace theseus {

using nlohmann::json;

Document make_original(std::string id, std::string dataset, std::string author, std::string source_key,
                       std::string text) {
  Document d;
  d.id = std::move(id);
  d.dataset = std::move(dataset);
  d.origin_author = std::move(author);
  d.source_key = std::move(source_key);
  d.word_count = count_words(text);
  d.text = std::move(text);
  return d;
}

Document make_paraphrase(const Document& parent, std::string paraphraser, std::string text) {
  Document d;
  d.iteration = parent.iteration + 1;
  // Ids follow "<root>~<paraphraser>~<iteration>".
  std::string stem = parent.id + "~" + paraphraser;
  const std::string suffix = "~" + std::to_string(parent.iteration);
  if (parent.iteration > 0 && parent.id.size() > suffix.size() && parent.id.ends_with(suffix)) {
    stem = parent.id.substr(0, parent.id.size() - suffix.size());
  }
  d.id = stem + "~" + std::to_string(d.iteration);
  d.dataset = parent.dataset;
  d.origin_author = parent.origin_author;
  d.paraphraser = std::move(paraphraser);
  d.parent_id = parent.id;
  d.source_key = parent.source_key;
  d.word_count = count_words(text);
  d.text = std::move(text);
  return d;
}

void check_integrity(std::span<const Document> documents) {
  std::unordered_map<std::string_view, const Document*> by_id;
  by_id.reserve(documents.size());
  for (const auto& d : documents) {
    if (d.id.empty()) throw IntegrityError("document with empty id");
    if (!by_id.emplace(d.id, &d).second) throw IntegrityError("duplicate document id: " + d.id);
  }
  for (const auto& d : documents) {
    if (d.iteration < 0) throw IntegrityError("negative iteration on " + d.id);
    const bool original = d.iteration == 0;
    if (original != !d.paraphraser.has_value() || original != !d.parent_id.has_value()) {
      throw IntegrityError("iteration/paraphraser/parent_id mismatch on " + d.id);
    }
    if (d.word_count != count_words(d.text)) {
      throw IntegrityError("word_count of " + d.id + " is " + std::to_string(d.word_count) + ", tokenizer counts " +
                           std::to_string(count_words(d.text)));
    }
    if (original) continue;
    auto it = by_id.find(*d.parent_id);
    if (it == by_id.end()) throw IntegrityError("orphan document " + d.id + ": parent " + *d.parent_id + " missing");
    const Document& p = *it->second;
    if (p.iteration != d.iteration - 1) throw IntegrityError("orphan document " + d.id + ": parent iteration mismatch");
    if (p.origin_author != d.origin_author || p.dataset != d.dataset || p.source_key != d.source_key) {
      throw IntegrityError("document " + d.id + " disagrees with parent " + p.id + " on provenance");
    }
    if (p.iteration > 0 && p.paraphraser != d.paraphraser) {
      throw IntegrityError("document " + d.id + " switches paraphraser mid-chain");
    }
  }
}

Corpus::Corpus(std::vector<Document> documents) : docs_(std::move(documents)) {
  check_integrity(docs_);
  index_.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) index_.emplace(docs_[i].id, i);
}

const Document* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &docs_[it->second];
}

const Document& Corpus::at(std::string_view id) const {
  const Document* d = find(id);
  if (!d) throw CoverageError("unknown document id: " + std::string(id));
  return *d;
}

namespace {

template <typename Fn>
std::vector<std::string> distinct(const std::vector<Document>& docs, Fn&& field) {
  std::set<std::string> s;
  for (const auto& d : docs) {
    if (auto v = field(d)) s.insert(*v);
  }
  return {s.begin(), s.end()};
}

}  // namespace

std::vector<std::string> Corpus::authors() const {
  return distinct(docs_, [](const Document& d) { return std::optional<std::string>(d.origin_author); });
}
std::vector<std::string> Corpus::paraphrasers() const {
  return distinct(docs_, [](const Document& d) { return d.paraphraser; });
}
std::vector<std::string> Corpus::datasets() const {
  return distinct(docs_, [](const Document& d) { return std::optional<std::string>(d.dataset); });
}
std::vector<std::string> Corpus::source_keys() const {
  return distinct(docs_, [](const Document& d) { return std::optional<std::string>(d.source_key); });
}

int Corpus::max_iteration() const {
  int m = 0;
  for (const auto& d : docs_) m = std::max(m, d.iteration);
  return m;
}

// ---------------------------------------------------------------------------
// Serialization

json to_json(const Document& doc) {
  json j;
  j["id"] = doc.id;
  j["dataset"] = doc.dataset;
  j["origin_author"] = doc.origin_author;
  if (doc.paraphraser) j["paraphraser"] = *doc.paraphraser;
  j["iteration"] = doc.iteration;
  if (doc.parent_id) j["parent_id"] = *doc.parent_id;
  j["source_key"] = doc.source_key;
  j["text"] = doc.text;
  j["word_count"] = doc.word_count;
  return j;
}

Document document_from_json(const json& j) {
  static const std::set<std::string> kFields = {"id",        "dataset",    "origin_author", "paraphraser", "iteration",
                                                "parent_id", "source_key", "text",          "word_count"};
  if (!j.is_object()) throw Error("record is not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kFields.contains(key)) throw Error("unknown field '" + key + "'");
  }
  auto req_string = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_string()) throw Error(std::string("missing or non-string field '") + key + "'");
    return j[key].get<std::string>();
  };
  auto opt_string = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_string()) throw Error(std::string("field '") + key + "' must be a string when present");
    return j[key].get<std::string>();
  };
  Document d;
  d.id = req_string("id");
  d.dataset = req_string("dataset");
  d.origin_author = req_string("origin_author");
  d.paraphraser = opt_string("paraphraser");
  if (!j.contains("iteration") || !j["iteration"].is_number_integer()) throw Error("missing integer field 'iteration'");
  d.iteration = j["iteration"].get<int>();
  d.parent_id = opt_string("parent_id");
  d.source_key = req_string("source_key");
  d.text = req_string("text");
  if (!j.contains("word_count") || !j["word_count"].is_number_unsigned()) {
    throw Error("missing non-negative integer field 'word_count'");
  }
  d.word_count = j["word_count"].get<std::size_t>();
  return d;
}

Corpus read_corpus(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      docs.push_back(document_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const IntegrityError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return Corpus(std::move(docs));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus) out << to_json(d).dump() << '\n';
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus " + path.string());
  write_corpus(out, corpus);
}

std::vector<ParaphraseChain> extract_chains(const Corpus& corpus, std::string_view paraphraser) {
  // parent id -> child by this paraphraser (smallest id wins on duplicates)
  std::unordered_map<std::string, const Document*> child_of;
  for (const auto& d : corpus) {
    if (!d.paraphraser || *d.paraphraser != paraphraser) continue;
    auto [it, inserted] = child_of.emplace(*d.parent_id, &d);
    if (!inserted && d.id < it->second->id) it->second = &d;
  }
  std::vector<ParaphraseChain> chains;
  for (const auto& d : corpus) {
    if (d.iteration != 0 || !child_of.contains(d.id)) continue;
    ParaphraseChain chain;
    chain.chain_id = d.id;
    chain.paraphraser = std::string(paraphraser);
    chain.documents.push_back(d);
    for (auto it = child_of.find(d.id); it != child_of.end(); it = child_of.find(it->second->id)) {
      chain.documents.push_back(*it->second);
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

// ---------------------------------------------------------------------------
// Splitting

SplitResult split(const Corpus& corpus, const SplitSpec& spec) {
  if (corpus.empty()) throw PreconditionError("split: corpus is empty");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw PreconditionError("split: train_fraction must lie in (0, 1)");
  }
  std::vector<std::string> keys = corpus.source_keys();
  std::mt19937_64 rng(combine_seeds({spec.seed, 0x5b11f7ULL}));
  std::shuffle(keys.begin(), keys.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(keys.size())));

  SplitResult result;
  std::set<std::string> train_keys(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_train));
  result.train_keys.assign(train_keys.begin(), train_keys.end());
  std::set<std::string> test_keys(keys.begin() + static_cast<std::ptrdiff_t>(n_train), keys.end());
  result.test_keys.assign(test_keys.begin(), test_keys.end());
  result.train = corpus.filter([&](const Document& d) { return train_keys.contains(d.source_key); });
  result.test = corpus.filter([&](const Document& d) { return !train_keys.contains(d.source_key); });
  if (result.train.empty() || result.test.empty()) {
    std::string msg = "split of " + std::to_string(keys.size()) + " source key(s) at fraction " +
                      std::to_string(spec.train_fraction) + " leaves the " +
                      (result.train.empty() ? "train" : "test") + " side empty";
    spdlog::warn("{}", msg);
    result.warnings.push_back(std::move(msg));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Ground truth

std::string to_string(GroundTruthPolicy policy) {
  return policy == GroundTruthPolicy::Traditional ? "traditional" : "alternative";
}

GroundTruthPolicy parse_policy(std::string_view name) {
  const std::string lower = to_lower(name);
  if (lower == "traditional") return GroundTruthPolicy::Traditional;
  if (lower == "alternative") return GroundTruthPolicy::Alternative;
  throw ConfigError("unknown ground-truth policy '" + std::string(name) + "'");
}

std::vector<LabeledDocument> label(const Corpus& corpus, GroundTruthPolicy policy) {
  const auto authors = corpus.authors();
  return label(corpus, policy, authors);
}

std::vector<LabeledDocument> label(const Corpus& corpus, GroundTruthPolicy policy,
                                   std::span<const std::string> candidate_authors) {
  const std::set<std::string> candidates(candidate_authors.begin(), candidate_authors.end());
  std::vector<LabeledDocument> out;
  out.reserve(corpus.size());
  for (const auto& d : corpus) {
    if (policy == GroundTruthPolicy::Traditional || d.iteration == 0) {
      out.push_back({d.id, d.origin_author});
      continue;
    }
    if (!candidates.contains(*d.paraphraser)) {
      throw LabelingError("alternative labeling of " + d.id + ": paraphraser '" + *d.paraphraser +
                          "' is not a candidate author");
    }
    out.push_back({d.id, *d.paraphraser});
  }
  return out;
}

std::string to_string(DetectionKind kind) {
  switch (kind) {
    case DetectionKind::Normal: return "normal";
    case DetectionKind::Traditional: return "traditional";
    case DetectionKind::Alternative: return "alternative";
  }
  return "?";
}

DetectionKind parse_detection_kind(std::string_view name) {
  const std::string lower = to_lower(name);
  if (lower == "normal" || lower == "original") return DetectionKind::Normal;
  if (lower == "traditional") return DetectionKind::Traditional;
  if (lower == "alternative") return DetectionKind::Alternative;
  throw ConfigError("unknown detection scenario '" + std::string(name) + "'");
}

std::vector<LabeledDocument> detection_scenario(const Corpus& corpus, const DetectionScenario& scenario) {
  auto is_t0 = [](const Document& d, const std::string& author) {
    return d.iteration == 0 && d.origin_author == author;
  };
  auto is_t1 = [&](const Document& d, const std::string& author) {
    return d.iteration == 1 && d.origin_author == author && d.paraphraser == scenario.paraphraser;
  };
  struct Rule {
    std::string description;
    std::function<bool(const Document&)> match;
    std::string_view label;
  };
  const std::string& human = scenario.human_author;
  const std::string& llm = scenario.llm_author;
  const std::string p = scenario.paraphraser;
  std::vector<Rule> rules;
  switch (scenario.kind) {
    case DetectionKind::Normal:
      rules = {{"T0(" + human + ")", [&](const Document& d) { return is_t0(d, human); }, kHumanLabel},
               {"T0(" + llm + ")", [&](const Document& d) { return is_t0(d, llm); }, kAiLabel}};
      break;
    case DetectionKind::Traditional:
      rules = {{"T1(" + human + ") by " + p, [&](const Document& d) { return is_t1(d, human); }, kHumanLabel},
               {"T1(" + llm + ") by " + p, [&](const Document& d) { return is_t1(d, llm); }, kAiLabel}};
      break;
    case DetectionKind::Alternative:
      rules = {{"T0(" + human + ")", [&](const Document& d) { return is_t0(d, human); }, kHumanLabel},
               {"T1(" + human + ") by " + p, [&](const Document& d) { return is_t1(d, human); }, kAiLabel}};
      break;
  }
  std::vector<LabeledDocument> out;
  std::vector<std::string> absent;
  for (const auto& rule : rules) {
    std::size_t hits = 0;
    for (const auto& d : corpus) {
      if (rule.match(d)) {
        out.push_back({d.id, std::string(rule.label)});
        ++hits;
      }
    }
    if (hits == 0) absent.push_back(rule.description);
  }
  if (!absent.empty()) {
    std::string msg = to_string(scenario.kind) + " scenario is missing:";
    for (const auto& a : absent) msg += " " + a;
    throw ScenarioError(msg);
  }
  return out;
}

// ---------------------------------------------------------------------------

Corpus filter_by_length(const Corpus& corpus, std::size_t min_words) {
  // Documents are kept iff long enough and their parent is kept; resolve by
  // walking iterations in increasing order.
  std::map<int, std::vector<const Document*>> by_iteration;
  for (const auto& d : corpus) by_iteration[d.iteration].push_back(&d);
  std::unordered_map<std::string, bool> kept;
  for (const auto& [iteration, docs] : by_iteration) {
    for (const Document* d : docs) {
      bool keep = d->word_count >= min_words;
      if (keep && d->parent_id) {
        auto it = kept.find(*d->parent_id);
        keep = it != kept.end() && it->second;
      }
      kept[d->id] = keep;
    }
  }
  return corpus.filter([&](const Document& d) { return kept.at(d.id); });
}

}  // namespace theseus
