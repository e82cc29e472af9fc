#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace theseus {

/// Open replacement for a LIWC-style dictionary.
///
/// File format: a header line `%categories: a,b,c`, then one
/// `pattern<TAB>cat1[,cat2...]` per line. A pattern is a literal word or a
/// prefix ending in `*` (the only place `*` may appear). Blank lines and
/// lines starting with `#` are ignored.
struct CategoryLexicon {
  std::vector<std::string> categories;
  std::map<std::string, std::vector<std::size_t>> exact;     // word -> category indices
  std::map<std::string, std::vector<std::size_t>> prefixes;  // prefix (without '*') -> indices

  bool operator==(const CategoryLexicon&) const = default;
};

CategoryLexicon parse_lexicon(std::istream& in);
CategoryLexicon load_lexicon(const std::filesystem::path& path);
void write_lexicon(std::ostream& out, const CategoryLexicon& lexicon);

/// Small bundled demonstration lexicon (affect, cognition, social, time...).
const CategoryLexicon& demo_lexicon();

/// Sorted category indices for a lowercased word: the exact entry's
/// categories united with those of the longest matching prefix pattern.
std::vector<std::size_t> lexicon_match(std::string_view word, const CategoryLexicon& lexicon);

/// Bundled English function-word list used when none is configured.
std::span<const std::string> default_function_words();

/// Closed word classes standing in for part-of-speech tag rates.
struct ClosedClass {
  std::string_view name;
  std::span<const std::string_view> words;
};
std::span<const ClosedClass> closed_classes();

/// `word<TAB>syn1,syn2,...` per line. Only single-word synonyms are kept.
struct SynonymLexicon {
  std::map<std::string, std::vector<std::string>> entries;

  const std::vector<std::string>* find(std::string_view word) const;
};

SynonymLexicon parse_synonyms(std::istream& in);
SynonymLexicon load_synonyms(const std::filesystem::path& path);
void write_synonyms(std::ostream& out, const SynonymLexicon& lexicon);

/// Small bundled English synonym list.
const SynonymLexicon& demo_synonyms();

}  // namespace theseus
