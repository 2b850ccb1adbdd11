#include "mvabsa/lexicon.hpp"

#include <algorithm>

#include "mvabsa/unicode_tables.hpp"

namespace mvabsa {

namespace {

bool in_ranges(char32_t cp, const detail::CodepointRange* ranges, std::size_t count) {
  std::size_t lo = 0, hi = count;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (cp < ranges[mid].first) {
      hi = mid;
    } else if (cp > ranges[mid].last) {
      lo = mid + 1;
    } else {
      return true;
    }
  }
  return false;
}

}  // namespace

bool is_punctuation(char32_t cp) {
  return in_ranges(cp, detail::kPunctuation, detail::kPunctuationCount);
}

bool is_whitespace(char32_t cp) {
  return in_ranges(cp, detail::kWhitespace, detail::kWhitespaceCount);
}

bool is_lowercase(char32_t cp) {
  return in_ranges(cp, detail::kLowercase, detail::kLowercaseCount);
}

bool is_uppercase(char32_t cp) {
  return in_ranges(cp, detail::kUppercase, detail::kUppercaseCount);
}

std::vector<char32_t> decode_utf8(const std::string& text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char b0 = static_cast<unsigned char>(text[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      throw InputError("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > text.size()) {
      throw InputError("truncated UTF-8 sequence at offset " + std::to_string(i));
    }
    for (std::size_t j = 1; j < len; ++j) {
      unsigned char b = static_cast<unsigned char>(text[i + j]);
      if ((b & 0xC0) != 0x80) {
        throw InputError("invalid UTF-8 continuation at offset " +
                         std::to_string(i + j));
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t kMinByLen[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF) || cp < kMinByLen[len]) {
      throw InputError("invalid code point at offset " + std::to_string(i));
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(const std::vector<char32_t>& codepoints) {
  std::string out;
  for (char32_t cp : codepoints) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }
  return out;
}

std::vector<BoundaryToken> tokenize(const std::string& sentence) {
  if (sentence.empty()) {
    throw InputError("cannot tokenize an empty sentence");
  }
  std::vector<char32_t> cps = decode_utf8(sentence);

  std::vector<BoundaryToken> tokens;
  std::size_t token_start = 0;
  std::vector<char32_t> current;

  auto flush = [&](std::size_t end) {
    if (!current.empty()) {
      tokens.push_back({encode_utf8(current), token_start, end});
      current.clear();
    }
  };

  for (std::size_t i = 0; i < cps.size(); ++i) {
    char32_t cp = cps[i];
    if (is_whitespace(cp)) {
      flush(i);
      continue;
    }
    if (is_punctuation(cp) || cp == U'-') {
      flush(i);
      tokens.push_back({encode_utf8({cp}), i, i + 1});
      continue;
    }
    if (!current.empty()) {
      char32_t prev = cps[i - 1];
      bool ascii_boundary = (prev < 128) != (cp < 128);
      bool camel_boundary = is_lowercase(prev) && is_uppercase(cp);
      if (ascii_boundary || camel_boundary) {
        flush(i);
      }
    }
    if (current.empty()) token_start = i;
    current.push_back(cp);
  }
  flush(cps.size());
  return tokens;
}

PhraseLexicon build_lexicon(const std::string& sentence) {
  std::vector<BoundaryToken> tokens = tokenize(sentence);
  std::vector<char32_t> cps = decode_utf8(sentence);

  std::vector<std::string> spans;
  std::unordered_set<std::string> seen;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t j = i; j < tokens.size(); ++j) {
      ++pairs;
      std::vector<char32_t> slice(cps.begin() + tokens[i].start,
                                  cps.begin() + tokens[j].end);
      std::string span = encode_utf8(slice);
      if (seen.insert(span).second) {
        spans.push_back(std::move(span));
      }
    }
  }
  return PhraseLexicon(sentence, std::move(tokens), std::move(spans), pairs);
}

PhraseLexicon::PhraseLexicon(std::string sentence, std::vector<BoundaryToken> tokens,
                             std::vector<std::string> spans,
                             std::size_t index_pair_count)
    : sentence_(std::move(sentence)),
      tokens_(std::move(tokens)),
      spans_(std::move(spans)),
      span_set_(spans_.begin(), spans_.end()),
      index_pair_count_(index_pair_count) {}

bool PhraseLexicon::contains(const std::string& phrase) const {
  return span_set_.count(phrase) > 0;
}

}  // namespace mvabsa
