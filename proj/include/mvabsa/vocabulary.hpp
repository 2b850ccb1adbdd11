#pragma once

#include <string>
#include <vector>

#include "mvabsa/error.hpp"

namespace mvabsa {

// Maps dense token ids [0, size) to their byte expansions.
class TokenizerVocabulary {
 public:
  explicit TokenizerVocabulary(std::vector<std::string> tokens);

  // All 256 single-byte tokens; id == byte value.
  static TokenizerVocabulary byte_vocabulary();

  const std::string& bytes(int token_id) const { return tokens_[token_id]; }
  int size() const { return static_cast<int>(tokens_.size()); }

 private:
  std::vector<std::string> tokens_;
};

}  // namespace mvabsa
