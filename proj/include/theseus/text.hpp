#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace theseus {

/// Half-open byte range [begin, end) into the source text.
struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Tokenized view of one text.
///
/// Words are maximal runs of ASCII letters, digits, apostrophes and non-ASCII
/// bytes that contain at least one letter or digit; they are stored lowercased.
/// Sentence spans partition the text: each span runs through a terminator
/// (`.`, `!`, `?` followed by whitespace or end of text) plus the whitespace
/// after it. A text with no non-whitespace content has no sentences.
struct TokenStream {
  std::vector<std::string> words;
  std::vector<SentenceSpan> sentences;
  std::string chars;
  std::map<char, std::size_t> punctuation_counts;
  std::size_t uppercase_count = 0;
  std::size_t non_space_count = 0;
};

TokenStream tokenize(std::string_view text);

/// Number of words `tokenize` would produce.
std::size_t count_words(std::string_view text);

/// Sentence spans only.
std::vector<SentenceSpan> split_sentences(std::string_view text);

/// A text piece is either a word run or the non-word bytes between words.
struct TextPiece {
  std::string text;
  bool is_word = false;
};

/// Lossless segmentation: concatenating the pieces yields `text`.
std::vector<TextPiece> segment_words(std::string_view text);

std::string to_lower(std::string_view s);

/// Lowercase and collapse whitespace runs to one space, trimming both ends.
std::string normalize_whitespace_lower(std::string_view text);

bool is_word_byte(unsigned char c);

/// Copy the capitalization pattern of `model` (Initial or ALL CAPS) onto `word`.
std::string match_case(std::string_view model, std::string_view word);

}  // namespace theseus
