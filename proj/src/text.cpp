#include "theseus/text.hpp"

#include <cctype>

namespace theseus {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_alnum_ascii(unsigned char c) { return c < 0x80 && std::isalnum(c) != 0; }

// Calls fn(begin, end) for each word run holding at least one alphanumeric byte.
template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    bool has_alnum = false;
    while (j < n && is_word_byte(static_cast<unsigned char>(text[j]))) {
      const auto c = static_cast<unsigned char>(text[j]);
      has_alnum = has_alnum || is_alnum_ascii(c) || c >= 0x80;
      ++j;
    }
    if (has_alnum) fn(i, j);
    i = j;
  }
}

}  // namespace

bool is_word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0 || c == '\''; }

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string normalize_whitespace_lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  return out;
}

std::vector<SentenceSpan> split_sentences(std::string_view text) {
  std::vector<SentenceSpan> spans;
  const std::size_t n = text.size();
  std::size_t start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_terminator(text[i])) continue;
    if (i + 1 < n && !is_space(static_cast<unsigned char>(text[i + 1]))) continue;
    std::size_t end = i + 1;
    while (end < n && is_space(static_cast<unsigned char>(text[end]))) ++end;
    spans.push_back({start, end});
    start = end;
    i = end - 1;
  }
  if (start < n) {
    bool content = false;
    for (std::size_t i = start; i < n && !content; ++i) content = !is_space(static_cast<unsigned char>(text[i]));
    if (content) {
      spans.push_back({start, n});
    } else if (!spans.empty()) {
      spans.back().end = n;
    }
  }
  return spans;
}

TokenStream tokenize(std::string_view text) {
  TokenStream ts;
  ts.chars = std::string(text);
  for_each_word(text, [&](std::size_t b, std::size_t e) { ts.words.push_back(to_lower(text.substr(b, e - b))); });
  ts.sentences = split_sentences(text);

  // Apostrophes inside word runs belong to the word, not to punctuation.
  std::vector<bool> in_word(text.size(), false);
  for_each_word(text, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) in_word[k] = true;
  });
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) continue;
    ++ts.non_space_count;
    if (c < 0x80 && std::isupper(c)) ++ts.uppercase_count;
    if (c < 0x80 && std::ispunct(c) && !in_word[i]) ++ts.punctuation_counts[static_cast<char>(c)];
  }
  return ts;
}

std::size_t count_words(std::string_view text) {
  std::size_t count = 0;
  for_each_word(text, [&](std::size_t, std::size_t) { ++count; });
  return count;
}

std::vector<TextPiece> segment_words(std::string_view text) {
  std::vector<TextPiece> pieces;
  std::size_t cursor = 0;
  for_each_word(text, [&](std::size_t b, std::size_t e) {
    if (b > cursor) pieces.push_back({std::string(text.substr(cursor, b - cursor)), false});
    pieces.push_back({std::string(text.substr(b, e - b)), true});
    cursor = e;
  });
  if (cursor < text.size()) pieces.push_back({std::string(text.substr(cursor)), false});
  return pieces;
}

std::string match_case(std::string_view model, std::string_view word) {
  std::string out(word);
  if (model.empty() || out.empty()) return out;
  const auto first = static_cast<unsigned char>(model[0]);
  if (!(first < 0x80 && std::isupper(first))) return out;
  bool all_upper = model.size() > 1;
  for (unsigned char c : model) {
    if (c < 0x80 && std::islower(c)) {
      all_upper = false;
      break;
    }
  }
  if (all_upper) {
    for (auto& c : out) {
      if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  } else if (static_cast<unsigned char>(out[0]) < 0x80) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

}  // namespace theseus
