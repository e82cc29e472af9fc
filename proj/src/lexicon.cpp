#include "theseus/lexicon.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include "theseus/errors.hpp"
#include "theseus/text.hpp"

namespace theseus {

namespace {

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    std::string item(s.substr(start, end - start));
    item.erase(0, item.find_first_not_of(" \t\r"));
    item.erase(item.find_last_not_of(" \t\r") + 1);
    if (!item.empty()) out.push_back(std::move(item));
    start = end + 1;
  }
  return out;
}

constexpr std::string_view kDemoLexicon = R"(%categories: posemo,negemo,anx,anger,sad,cogproc,certain,tentat,social,family,time,space,motion,percept,work,money
# Demonstration category lexicon. Patterns ending in '*' match by prefix.
happ*	posemo
joy*	posemo
love*	posemo,social
good	posemo
great	posemo
nice	posemo
hope*	posemo
glad	posemo
benefit*	posemo
success*	posemo,work
bad	negemo
hate*	negemo,anger
hurt*	negemo
pain*	negemo
worr*	negemo,anx
fear*	negemo,anx
nervous*	negemo,anx
anxi*	negemo,anx
afraid	negemo,anx
angr*	negemo,anger
annoy*	negemo,anger
fight*	negemo,anger
kill*	negemo,anger
sad	negemo,sad
abandon*	negemo,sad
cry*	negemo,sad
grief	negemo,sad
lonel*	negemo,sad
lose	negemo,sad
loss*	negemo,sad
think*	cogproc
know*	cogproc
because	cogproc
reason*	cogproc
cause*	cogproc
consider*	cogproc
understand*	cogproc
believ*	cogproc
always	certain,time
never	certain,time
definite*	certain
certain*	certain
clear*	certain
must	certain
maybe	tentat
perhaps	tentat
possib*	tentat
might	tentat
guess*	tentat
seem*	tentat,cogproc
probab*	tentat
friend*	social
people	social
person*	social
talk*	social
they	social
we	social
mother*	family,social
father*	family,social
famil*	family,social
brother*	family,social
sister*	family,social
today	time
now	time
when	time
year*	time
day*	time
before	time
after	time
soon	time
above	space
below	space
around	space
inside	space
outside	space
near*	space
far	space
go	motion
went	motion
run	motion
run*	motion
walk*	motion
mov*	motion
arriv*	motion
see	percept
saw	percept
look*	percept
hear*	percept
feel*	percept
touch*	percept
job*	work
work*	work
study*	work
project*	work
employ*	work,money
pay*	money
money	money
cost*	money
price*	money
cash	money
)";

const std::vector<std::string>& function_word_list() {
  static const std::vector<std::string> words = {
      "a",       "about",   "above",   "after",    "again",   "against", "all",     "almost",  "also",    "although",
      "am",      "among",   "an",      "and",      "another", "any",     "are",     "around",  "as",      "at",
      "be",      "because", "been",    "before",   "being",   "below",   "between", "both",    "but",     "by",
      "can",     "could",   "did",     "do",       "does",    "down",    "during",  "each",    "either",  "enough",
      "even",    "every",   "few",     "for",      "from",    "had",     "has",     "have",    "he",      "her",
      "here",    "hers",    "him",     "his",      "how",     "however", "i",       "if",      "in",      "into",
      "is",      "it",      "its",     "just",     "less",    "many",    "may",     "me",      "might",   "more",
      "most",    "much",    "must",    "my",       "neither", "no",      "nor",     "not",     "now",     "of",
      "off",     "often",   "on",      "once",     "one",     "only",    "or",      "other",   "our",     "out",
      "over",    "own",     "perhaps", "rather",   "same",    "several", "shall",   "she",     "should",  "since",
      "so",      "some",    "such",    "than",     "that",    "the",     "their",   "them",    "then",    "there",
      "these",   "they",    "this",    "those",    "though",  "through", "thus",    "to",      "too",     "toward",
      "under",   "unless",  "until",   "up",       "upon",    "us",      "very",    "was",     "we",      "were",
      "what",    "when",    "where",   "whether",  "which",   "while",   "who",     "whom",    "whose",   "why",
      "will",    "with",    "within",  "without",  "would",   "yet",     "you",     "your",    "yours",   "itself"};
  return words;
}

constexpr std::array<std::string_view, 16> kDeterminers = {"a",     "an",   "the",  "this", "that",  "these",
                                                           "those", "some", "any",  "each", "every", "no",
                                                           "all",   "both", "either", "neither"};
constexpr std::array<std::string_view, 28> kPrepositions = {
    "about", "above", "across", "after",  "against", "among", "around", "at",      "before", "behind",
    "below", "between", "by",   "during", "for",     "from",  "in",     "into",    "of",     "off",
    "on",    "over",  "through", "to",    "toward",  "under", "upon",   "with"};
constexpr std::array<std::string_view, 24> kPronouns = {"i",   "me",   "my",   "mine", "you",  "your", "yours", "he",
                                                        "him", "his",  "she",  "her",  "hers", "it",   "its",   "we",
                                                        "us",  "our",  "they", "them", "their", "who", "whom", "itself"};
constexpr std::array<std::string_view, 14> kConjunctions = {"and",   "but",  "or",      "nor",    "so",     "yet", "for",
                                                            "because", "although", "though", "while", "if", "unless", "whether"};
constexpr std::array<std::string_view, 21> kAuxiliaries = {"am",    "is",    "are",   "was",  "were",   "be",    "been",
                                                           "being", "have",  "has",   "had",  "do",     "does",  "did",
                                                           "can",   "could", "will",  "would", "shall", "should", "must"};

const std::array<ClosedClass, 5> kClosedClasses = {{
    {"determiners", kDeterminers},
    {"prepositions", kPrepositions},
    {"pronouns", kPronouns},
    {"conjunctions", kConjunctions},
    {"auxiliaries", kAuxiliaries},
}};

}  // namespace

CategoryLexicon parse_lexicon(std::istream& in) {
  CategoryLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    if (!have_header) {
      constexpr std::string_view kHeader = "%categories:";
      if (!line.starts_with(kHeader)) throw ParseError(line_no, "expected '%categories:' header");
      lex.categories = split_list(std::string_view(line).substr(kHeader.size()), ',');
      std::set<std::string> unique(lex.categories.begin(), lex.categories.end());
      if (unique.size() != lex.categories.size()) throw ParseError(line_no, "duplicate category name");
      if (lex.categories.empty()) throw ParseError(line_no, "no categories declared");
      have_header = true;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "expected pattern<TAB>categories");
    std::string pattern = to_lower(line.substr(0, tab));
    if (pattern.empty()) throw ParseError(line_no, "empty pattern");
    const auto star = pattern.find('*');
    if (star != std::string::npos && star + 1 != pattern.size()) {
      throw ParseError(line_no, "'*' allowed only as the final character");
    }
    std::vector<std::size_t> indices;
    for (const auto& name : split_list(std::string_view(line).substr(tab + 1), ',')) {
      auto it = std::find(lex.categories.begin(), lex.categories.end(), name);
      if (it == lex.categories.end()) throw ParseError(line_no, "unknown category '" + name + "'");
      indices.push_back(static_cast<std::size_t>(it - lex.categories.begin()));
    }
    if (indices.empty()) throw ParseError(line_no, "pattern without categories");
    auto& slot = star == std::string::npos ? lex.exact[pattern] : lex.prefixes[pattern.substr(0, star)];
    slot.insert(slot.end(), indices.begin(), indices.end());
    std::sort(slot.begin(), slot.end());
    slot.erase(std::unique(slot.begin(), slot.end()), slot.end());
  }
  if (!have_header) throw ParseError(line_no, "empty lexicon (missing header)");
  return lex;
}

CategoryLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  return parse_lexicon(in);
}

void write_lexicon(std::ostream& out, const CategoryLexicon& lexicon) {
  out << "%categories: ";
  for (std::size_t i = 0; i < lexicon.categories.size(); ++i) out << (i ? "," : "") << lexicon.categories[i];
  out << '\n';
  auto emit = [&](const std::string& pattern, const std::vector<std::size_t>& cats) {
    out << pattern << '\t';
    for (std::size_t i = 0; i < cats.size(); ++i) out << (i ? "," : "") << lexicon.categories[cats[i]];
    out << '\n';
  };
  for (const auto& [word, cats] : lexicon.exact) emit(word, cats);
  for (const auto& [prefix, cats] : lexicon.prefixes) emit(prefix + "*", cats);
}

const CategoryLexicon& demo_lexicon() {
  static const CategoryLexicon lex = [] {
    std::istringstream in{std::string(kDemoLexicon)};
    return parse_lexicon(in);
  }();
  return lex;
}

std::vector<std::size_t> lexicon_match(std::string_view word, const CategoryLexicon& lexicon) {
  std::vector<std::size_t> out;
  if (auto it = lexicon.exact.find(std::string(word)); it != lexicon.exact.end()) out = it->second;
  if (!lexicon.prefixes.empty()) {
    std::string probe(word);
    while (!probe.empty()) {
      if (auto it = lexicon.prefixes.find(probe); it != lexicon.prefixes.end()) {
        out.insert(out.end(), it->second.begin(), it->second.end());
        break;
      }
      probe.pop_back();
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::span<const std::string> default_function_words() { return function_word_list(); }

std::span<const ClosedClass> closed_classes() { return kClosedClasses; }

const std::vector<std::string>* SynonymLexicon::find(std::string_view word) const {
  auto it = entries.find(std::string(word));
  return it == entries.end() ? nullptr : &it->second;
}

SynonymLexicon parse_synonyms(std::istream& in) {
  SynonymLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "expected word<TAB>synonyms");
    const std::string word = to_lower(line.substr(0, tab));
    auto& syns = lex.entries[word];
    for (auto& syn : split_list(std::string_view(line).substr(tab + 1), ',')) {
      if (count_words(syn) != 1 || segment_words(syn).size() != 1) continue;
      syn = to_lower(syn);
      if (syn != word && std::find(syns.begin(), syns.end(), syn) == syns.end()) syns.push_back(std::move(syn));
    }
    if (syns.empty()) lex.entries.erase(word);
  }
  return lex;
}

SynonymLexicon load_synonyms(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synonym lexicon " + path.string());
  return parse_synonyms(in);
}

void write_synonyms(std::ostream& out, const SynonymLexicon& lexicon) {
  for (const auto& [word, syns] : lexicon.entries) {
    out << word << '\t';
    for (std::size_t i = 0; i < syns.size(); ++i) out << (i ? "," : "") << syns[i];
    out << '\n';
  }
}

namespace {

constexpr std::string_view kDemoSynonyms = R"(big	large,huge,vast
small	tiny,little,minor
good	fine,great,solid
bad	poor,awful,weak
fast	quick,rapid,swift
slow	sluggish,gradual,unhurried
important	crucial,vital,key
show	demonstrate,reveal,display
use	employ,apply,utilize
help	assist,aid,support
make	create,produce,build
begin	start,commence,launch
end	finish,conclude,close
say	state,claim,remark
think	believe,reckon,suppose
idea	notion,concept,thought
problem	issue,difficulty,trouble
result	outcome,consequence,effect
people	persons,individuals,folks
study	research,investigation,analysis
method	approach,technique,procedure
change	alter,modify,shift
increase	rise,growth,gain
decrease	decline,drop,fall
often	frequently,regularly,commonly
quickly	rapidly,swiftly,promptly
really	truly,genuinely,actually
very	highly,extremely,remarkably
many	numerous,several,various
new	novel,fresh,recent
old	aged,ancient,former
house	home,residence,dwelling
city	town,municipality,metropolis
car	vehicle,automobile,auto
happy	glad,cheerful,content
sad	unhappy,gloomy,sorrowful
)";

}  // namespace

const SynonymLexicon& demo_synonyms() {
  static const SynonymLexicon lex = [] {
    std::istringstream in{std::string(kDemoSynonyms)};
    return parse_synonyms(in);
  }();
  return lex;
}

}  // namespace theseus
