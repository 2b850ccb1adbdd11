#pragma once

#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "mvabsa/error.hpp"

namespace mvabsa {

// One boundary token of an input sentence. Offsets count Unicode scalar
// values against the original sentence, not bytes.
struct BoundaryToken {
  std::string text;
  std::size_t start = 0;  // inclusive, in code points
  std::size_t end = 0;    // exclusive, in code points

  bool operator==(const BoundaryToken& other) const = default;
};

// The valid phrase set of a sentence: every contiguous token span, as the
// exact surface substring (interior separators preserved). Membership is
// case-sensitive and byte-exact.
class PhraseLexicon {
 public:
  PhraseLexicon(std::string sentence, std::vector<BoundaryToken> tokens,
                std::vector<std::string> spans, std::size_t index_pair_count);

  const std::string& sentence() const { return sentence_; }
  const std::vector<BoundaryToken>& tokens() const { return tokens_; }

  // Deduplicated span strings, in first-occurrence order of the (i, j)
  // enumeration. The index-pair count stays n(n+1)/2 even when surface
  // strings collide.
  const std::vector<std::string>& spans() const { return spans_; }
  std::size_t index_pair_count() const { return index_pair_count_; }

  bool contains(const std::string& phrase) const;

 private:
  std::string sentence_;
  std::vector<BoundaryToken> tokens_;
  std::vector<std::string> spans_;
  std::unordered_set<std::string> span_set_;
  std::size_t index_pair_count_;
};

// Split a sentence at whitespace runs (discarded), punctuation and hyphen
// characters (single-character tokens), lowercase-to-uppercase transitions,
// and ASCII/non-ASCII run boundaries.
//
// Throws InputError on an empty sentence.
std::vector<BoundaryToken> tokenize(const std::string& sentence);

// Tokenize and enumerate all contiguous spans.
PhraseLexicon build_lexicon(const std::string& sentence);

// Character classes used by the tokenizer, exposed for tests.
bool is_punctuation(char32_t cp);
bool is_whitespace(char32_t cp);
bool is_lowercase(char32_t cp);
bool is_uppercase(char32_t cp);

// Decode UTF-8 into code points. Invalid sequences throw InputError.
std::vector<char32_t> decode_utf8(const std::string& text);
std::string encode_utf8(const std::vector<char32_t>& codepoints);

}  // namespace mvabsa
