#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvabsa/core.hpp"
#include "mvabsa/error.hpp"
#include "mvabsa/lexicon.hpp"
#include "mvabsa/vocabulary.hpp"

namespace mvabsa {

// Everything a constrained decode needs to know about one view of one
// instance: slot order, legal phrases, legal categories. Polarities are the
// fixed three-value set.
struct TupleSchema {
  Permutation permutation;
  std::shared_ptr<const PhraseLexicon> lexicon;
  std::shared_ptr<const CategorySet> categories;
};

// Deterministic byte-level automaton accepting exactly the well-formed
// bracketed tuple lists of a schema: `[ TUPLE (, TUPLE)* ]` with
// TUPLE = `(e1, e2, ..., ek)` over the schema's terminals. Immutable after
// compile; shareable across threads.
class GrammarAutomaton {
 public:
  struct State {
    std::vector<std::pair<uint8_t, int>> edges;  // sorted by byte
    bool accepting = false;
  };

  GrammarAutomaton(std::vector<State> states, int start);

  int start() const { return start_; }
  std::size_t state_count() const { return states_.size(); }
  bool is_accepting(int state) const { return states_[state].accepting; }

  // Successor of (state, byte), or -1 when the byte leaves the live set.
  int step(int state, uint8_t byte) const;

  // Bytes admissible from a state, in ascending order.
  std::vector<uint8_t> allowed_bytes(int state) const;

  bool accepts(std::string_view text) const;

  // Byte offset of the first violation; text.size() marks premature end of
  // input; nullopt when the string is accepted.
  std::optional<std::size_t> first_violation(std::string_view text) const;

 private:
  std::vector<State> states_;
  int start_;
};

// Position of one decode stream inside an automaton. Small value type;
// advancing never enters a dead state (that is an error instead).
class DecodeState {
 public:
  explicit DecodeState(std::shared_ptr<const GrammarAutomaton> automaton);

  const GrammarAutomaton& automaton() const { return *automaton_; }
  const std::shared_ptr<const GrammarAutomaton>& automaton_ptr() const {
    return automaton_;
  }
  int state() const { return state_; }
  std::size_t bytes_consumed() const { return bytes_consumed_; }
  bool accepting() const { return automaton_->is_accepting(state_); }

 private:
  friend DecodeState advance(const DecodeState& state, std::string_view bytes);
  friend std::optional<DecodeState> try_advance(const DecodeState& state,
                                                std::string_view bytes);
  std::shared_ptr<const GrammarAutomaton> automaton_;
  int state_;
  std::size_t bytes_consumed_;
};

// Consume bytes; throws DeadTransitionError (with the failing offset relative
// to `bytes`) if any prefix leaves the live-state set.
DecodeState advance(const DecodeState& state, std::string_view bytes);
std::optional<DecodeState> try_advance(const DecodeState& state,
                                       std::string_view bytes);

// Token ids whose byte expansion keeps the automaton live, ascending.
// Throws EmptyMaskError when a live non-accepting state admits no token
// (schema/tokenizer mismatch); an accepting state may legitimately return
// an empty mask at end of output.
std::vector<int> token_mask(const DecodeState& state,
                            const TokenizerVocabulary& vocab);

// Compiles automata for one dataset. The category and polarity sub-tries are
// built once here and spliced into every per-instance automaton; only the
// phrase trie varies per instance.
class GrammarCompiler {
 public:
  explicit GrammarCompiler(std::shared_ptr<const CategorySet> categories);

  std::shared_ptr<const GrammarAutomaton> compile(
      std::shared_ptr<const PhraseLexicon> lexicon,
      const Permutation& permutation) const;

 private:
  struct Trie;
  std::shared_ptr<const CategorySet> categories_;
  std::shared_ptr<const Trie> category_trie_;
  std::shared_ptr<const Trie> polarity_trie_;
};

// One-shot convenience over GrammarCompiler.
std::shared_ptr<const GrammarAutomaton> compile(const TupleSchema& schema);

// Parse a schema-valid output string into its tuple set, in canonical
// (at, ac, ot, p) field assignment regardless of the permutation that
// produced it. Duplicates are dropped; the result is sorted canonically.
// Throws ParseError for strings outside the schema's language.
std::vector<SentimentTuple> parse_tuples(std::string_view output,
                                         const TupleSchema& schema);

// Canonical surface form of a tuple set under a permutation, e.g.
// `[(wine list, drinks#style, excellent, positive)]`. Tuples are sorted and
// deduplicated first. Throws InputError on an empty set (the grammar has no
// empty-list form).
std::string format_tuples(std::vector<SentimentTuple> tuples,
                          const Permutation& permutation);

// EBNF rendering of the schema, for backends that accept a server-side
// grammar constraint.
std::string schema_to_ebnf(const TupleSchema& schema);

}  // namespace mvabsa
