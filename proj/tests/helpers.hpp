#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "theseus/corpus.hpp"
#include "theseus/paraphrase.hpp"
#include "theseus/synthgen.hpp"

namespace theseus::testing {

inline Document original(const std::string& author, const std::string& key, const std::string& text,
                         const std::string& dataset = "d") {
  return make_original(dataset + "/" + author + "/" + key, dataset, author, key, text);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("theseus-" + name + "-" + std::to_string(rng()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Synthetic paraphraser pulling toward `target`, with topic synonyms.
inline ParaphraserSpec pulling_spec(const std::vector<SyntheticAuthorProfile>& profiles, const std::string& target,
                                    double lex, double injection, std::uint64_t seed, std::string name = {}) {
  SyntheticParaphraserConfig pc;
  pc.lex_rate = lex;
  pc.injection_rate = injection;
  pc.seed = seed;
  for (const auto& p : profiles) {
    if (p.name == target) pc.style_target = p;
  }
  pc.synonyms = std::make_shared<SynonymLexicon>(topic_synonyms(profiles.front()));
  ParaphraserSpec spec;
  spec.name = name.empty() ? target : std::move(name);
  spec.backend = BackendKind::Synthetic;
  spec.synthetic = pc;
  return spec;
}

inline Corpus chained(const Corpus& corpus, ParaphraserSpec spec, int iterations) {
  Paraphraser p(std::move(spec));
  std::vector<Document> originals;
  for (const auto& d : corpus) {
    if (d.iteration == 0) originals.push_back(d);
  }
  return append_chains(corpus, build_chains(originals, p, iterations).chains);
}

inline ParaphraserSpec identity_spec(const std::string& name = "ident") {
  ParaphraserSpec spec;
  spec.name = name;
  spec.backend = BackendKind::Synthetic;
  spec.synthetic = SyntheticParaphraserConfig{};
  return spec;
}

}  // namespace theseus::testing
