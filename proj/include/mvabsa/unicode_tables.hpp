#pragma once

#include <cstddef>
#include <cstdint>

namespace mvabsa::detail {

struct CodepointRange {
  char32_t first;
  char32_t last;
};

extern const CodepointRange kPunctuation[];
extern const std::size_t kPunctuationCount;

extern const CodepointRange kWhitespace[];
extern const std::size_t kWhitespaceCount;

extern const CodepointRange kLowercase[];
extern const std::size_t kLowercaseCount;

extern const CodepointRange kUppercase[];
extern const std::size_t kUppercaseCount;

}  // namespace mvabsa::detail
