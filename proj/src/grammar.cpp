#include "mvabsa/grammar.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace mvabsa {

namespace {

constexpr const char* kElementSeparator = ", ";

void check_schema(const TupleSchema& schema) {
  if (!schema.lexicon || schema.lexicon->spans().empty()) {
    throw UnsatisfiableSchemaError(
        "schema has an empty phrase set; nothing can fill the term slots");
  }
  if (!schema.categories || schema.categories->size() == 0) {
    throw UnsatisfiableSchemaError("schema has an empty category set");
  }
}

}  // namespace

TokenizerVocabulary::TokenizerVocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) {
      throw ConfigError("vocabulary token " + std::to_string(i) +
                        " has an empty byte expansion");
    }
  }
}

TokenizerVocabulary TokenizerVocabulary::byte_vocabulary() {
  std::vector<std::string> tokens;
  tokens.reserve(256);
  for (int b = 0; b < 256; ++b) {
    tokens.push_back(std::string(1, static_cast<char>(b)));
  }
  return TokenizerVocabulary(std::move(tokens));
}

// ---------------------------------------------------------------------------
// Byte trie: the deterministic NFA fragment for one terminal class.
// ---------------------------------------------------------------------------

struct GrammarCompiler::Trie {
  struct Node {
    std::vector<std::pair<uint8_t, int>> edges;  // sorted by byte
    bool terminal = false;
  };
  std::vector<Node> nodes;

  Trie() { nodes.emplace_back(); }

  int child(int node, uint8_t byte) const {
    const auto& edges = nodes[node].edges;
    auto it = std::lower_bound(
        edges.begin(), edges.end(), byte,
        [](const std::pair<uint8_t, int>& e, uint8_t b) { return e.first < b; });
    if (it != edges.end() && it->first == byte) return it->second;
    return -1;
  }

  void insert(std::string_view s) {
    int node = 0;
    for (char c : s) {
      uint8_t byte = static_cast<uint8_t>(c);
      int next = child(node, byte);
      if (next < 0) {
        next = static_cast<int>(nodes.size());
        nodes.emplace_back();
        auto& edges = nodes[node].edges;
        auto it = std::lower_bound(edges.begin(), edges.end(),
                                   std::make_pair(byte, 0));
        edges.insert(it, {byte, next});
      }
      node = next;
    }
    nodes[node].terminal = true;
  }

  static Trie from(const std::vector<std::string>& strings) {
    Trie trie;
    for (const auto& s : strings) trie.insert(s);
    return trie;
  }

  // Lengths of all terminal matches starting at text[pos], ascending.
  std::vector<std::size_t> match_lengths(std::string_view text,
                                         std::size_t pos) const {
    std::vector<std::size_t> lengths;
    int node = 0;
    for (std::size_t i = pos; i <= text.size(); ++i) {
      if (nodes[node].terminal) lengths.push_back(i - pos);
      if (i == text.size()) break;
      node = child(node, static_cast<uint8_t>(text[i]));
      if (node < 0) break;
    }
    return lengths;
  }
};

namespace {

using Trie = GrammarCompiler::Trie;

// ---------------------------------------------------------------------------
// NFA scaffolding and subset construction.
// ---------------------------------------------------------------------------

struct Nfa {
  struct State {
    std::vector<std::pair<uint8_t, int>> edges;
    std::vector<int> eps;
  };
  std::vector<State> states;
  int start = -1;
  int accept = -1;

  int add_state() {
    states.emplace_back();
    return static_cast<int>(states.size()) - 1;
  }
  void add_edge(int from, uint8_t byte, int to) {
    states[from].edges.push_back({byte, to});
  }
  void add_eps(int from, int to) { states[from].eps.push_back(to); }

  // Copy a trie in as NFA states; terminal nodes get an epsilon edge to
  // `exit`. Returns the id of the copied root.
  int splice(const Trie& trie, int exit) {
    int base = static_cast<int>(states.size());
    states.resize(states.size() + trie.nodes.size());
    for (std::size_t i = 0; i < trie.nodes.size(); ++i) {
      State& s = states[base + static_cast<int>(i)];
      s.edges.reserve(trie.nodes[i].edges.size());
      for (auto [byte, to] : trie.nodes[i].edges) {
        s.edges.push_back({byte, base + to});
      }
      if (trie.nodes[i].terminal) s.eps.push_back(exit);
    }
    return base;
  }
};

class SubsetBuilder {
 public:
  explicit SubsetBuilder(const Nfa& nfa)
      : nfa_(nfa), mark_(nfa.states.size(), 0), epoch_(0) {}

  GrammarAutomaton build() {
    std::map<std::vector<int>, int> ids;
    std::vector<std::vector<int>> subsets;
    std::vector<GrammarAutomaton::State> dfa;

    std::vector<int> start_set = closure({nfa_.start});
    ids[start_set] = 0;
    subsets.push_back(start_set);
    dfa.emplace_back();

    for (std::size_t current = 0; current < subsets.size(); ++current) {
      std::map<uint8_t, std::vector<int>> buckets;
      for (int nfa_state : subsets[current]) {
        for (auto [byte, to] : nfa_.states[nfa_state].edges) {
          buckets[byte].push_back(to);
        }
      }
      GrammarAutomaton::State& dstate = dfa[current];
      dstate.accepting =
          std::binary_search(subsets[current].begin(), subsets[current].end(),
                             nfa_.accept);
      for (auto& [byte, targets] : buckets) {
        std::vector<int> next = closure(targets);
        auto [it, inserted] = ids.try_emplace(next, static_cast<int>(subsets.size()));
        if (inserted) {
          subsets.push_back(std::move(next));
          dfa.emplace_back();
        }
        dfa[current].edges.push_back({byte, it->second});
      }
    }
    prune_dead(dfa);
    return GrammarAutomaton(std::move(dfa), 0);
  }

 private:
  std::vector<int> closure(const std::vector<int>& seed) {
    ++epoch_;
    std::vector<int> result;
    std::vector<int> stack(seed);
    for (int s : stack) mark_[s] = epoch_;
    while (!stack.empty()) {
      int s = stack.back();
      stack.pop_back();
      result.push_back(s);
      for (int t : nfa_.states[s].eps) {
        if (mark_[t] != epoch_) {
          mark_[t] = epoch_;
          stack.push_back(t);
        }
      }
    }
    std::sort(result.begin(), result.end());
    return result;
  }

  // Drop states that cannot reach an accepting state, so a live DecodeState
  // always has a completion.
  static void prune_dead(std::vector<GrammarAutomaton::State>& dfa) {
    std::size_t n = dfa.size();
    std::vector<std::vector<int>> reverse(n);
    std::vector<char> live(n, 0);
    std::vector<int> stack;
    for (std::size_t i = 0; i < n; ++i) {
      for (auto [byte, to] : dfa[i].edges) reverse[to].push_back(static_cast<int>(i));
      if (dfa[i].accepting) {
        live[i] = 1;
        stack.push_back(static_cast<int>(i));
      }
    }
    while (!stack.empty()) {
      int s = stack.back();
      stack.pop_back();
      for (int p : reverse[s]) {
        if (!live[p]) {
          live[p] = 1;
          stack.push_back(p);
        }
      }
    }
    if (!live[0]) {
      throw UnsatisfiableSchemaError("grammar accepts no string at all");
    }
    std::vector<int> remap(n, -1);
    int next_id = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (live[i]) remap[i] = next_id++;
    }
    std::vector<GrammarAutomaton::State> pruned(next_id);
    for (std::size_t i = 0; i < n; ++i) {
      if (!live[i]) continue;
      GrammarAutomaton::State& out = pruned[remap[i]];
      out.accepting = dfa[i].accepting;
      for (auto [byte, to] : dfa[i].edges) {
        if (remap[to] >= 0) out.edges.push_back({byte, remap[to]});
      }
    }
    dfa = std::move(pruned);
  }

  const Nfa& nfa_;
  std::vector<uint32_t> mark_;
  uint32_t epoch_;
};

void append_literal_chain(Nfa& nfa, int from, std::string_view literal, int to) {
  int at = from;
  for (std::size_t i = 0; i < literal.size(); ++i) {
    int next = (i + 1 == literal.size()) ? to : nfa.add_state();
    nfa.add_edge(at, static_cast<uint8_t>(literal[i]), next);
    at = next;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// GrammarAutomaton
// ---------------------------------------------------------------------------

GrammarAutomaton::GrammarAutomaton(std::vector<State> states, int start)
    : states_(std::move(states)), start_(start) {}

int GrammarAutomaton::step(int state, uint8_t byte) const {
  const auto& edges = states_[state].edges;
  auto it = std::lower_bound(
      edges.begin(), edges.end(), byte,
      [](const std::pair<uint8_t, int>& e, uint8_t b) { return e.first < b; });
  if (it != edges.end() && it->first == byte) return it->second;
  return -1;
}

std::vector<uint8_t> GrammarAutomaton::allowed_bytes(int state) const {
  std::vector<uint8_t> bytes;
  bytes.reserve(states_[state].edges.size());
  for (auto [byte, to] : states_[state].edges) bytes.push_back(byte);
  return bytes;
}

bool GrammarAutomaton::accepts(std::string_view text) const {
  int state = start_;
  for (char c : text) {
    state = step(state, static_cast<uint8_t>(c));
    if (state < 0) return false;
  }
  return is_accepting(state);
}

std::optional<std::size_t> GrammarAutomaton::first_violation(
    std::string_view text) const {
  int state = start_;
  for (std::size_t i = 0; i < text.size(); ++i) {
    state = step(state, static_cast<uint8_t>(text[i]));
    if (state < 0) return i;
  }
  if (!is_accepting(state)) return text.size();
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// DecodeState
// ---------------------------------------------------------------------------

DecodeState::DecodeState(std::shared_ptr<const GrammarAutomaton> automaton)
    : automaton_(std::move(automaton)),
      state_(automaton_->start()),
      bytes_consumed_(0) {}

DecodeState advance(const DecodeState& state, std::string_view bytes) {
  DecodeState next = state;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    int succ = next.automaton_->step(next.state_, static_cast<uint8_t>(bytes[i]));
    if (succ < 0) {
      throw DeadTransitionError("no transition on byte " +
                                    std::to_string(static_cast<unsigned char>(bytes[i])) +
                                    " at offset " + std::to_string(i),
                                i);
    }
    next.state_ = succ;
    ++next.bytes_consumed_;
  }
  return next;
}

std::optional<DecodeState> try_advance(const DecodeState& state,
                                       std::string_view bytes) {
  DecodeState next = state;
  for (char c : bytes) {
    int succ = next.automaton_->step(next.state_, static_cast<uint8_t>(c));
    if (succ < 0) return std::nullopt;
    next.state_ = succ;
    ++next.bytes_consumed_;
  }
  return next;
}

std::vector<int> token_mask(const DecodeState& state,
                            const TokenizerVocabulary& vocab) {
  std::vector<int> mask;
  for (int id = 0; id < vocab.size(); ++id) {
    const std::string& bytes = vocab.bytes(id);
    int s = state.state();
    bool ok = true;
    for (char c : bytes) {
      s = state.automaton().step(s, static_cast<uint8_t>(c));
      if (s < 0) {
        ok = false;
        break;
      }
    }
    if (ok) mask.push_back(id);
  }
  if (mask.empty() && !state.accepting()) {
    throw EmptyMaskError(
        "no vocabulary token can continue this live state; the tokenizer "
        "cannot spell the schema's terminals");
  }
  return mask;
}

// ---------------------------------------------------------------------------
// GrammarCompiler
// ---------------------------------------------------------------------------

GrammarCompiler::GrammarCompiler(std::shared_ptr<const CategorySet> categories)
    : categories_(std::move(categories)) {
  if (!categories_ || categories_->size() == 0) {
    throw UnsatisfiableSchemaError("schema has an empty category set");
  }
  category_trie_ = std::make_shared<Trie>(Trie::from(categories_->categories()));
  polarity_trie_ = std::make_shared<Trie>(Trie::from(polarity_names()));
}

std::shared_ptr<const GrammarAutomaton> GrammarCompiler::compile(
    std::shared_ptr<const PhraseLexicon> lexicon,
    const Permutation& permutation) const {
  if (!lexicon || lexicon->spans().empty()) {
    throw UnsatisfiableSchemaError(
        "schema has an empty phrase set; nothing can fill the term slots");
  }
  Trie phrase_trie = Trie::from(lexicon->spans());
  Trie null_trie = Trie::from({std::string(kNullAspectMarker)});

  Nfa nfa;
  nfa.start = nfa.add_state();
  int expect_tuple = nfa.add_state();
  nfa.accept = nfa.add_state();
  nfa.add_edge(nfa.start, '[', expect_tuple);

  const auto& order = permutation.order();
  int arity = static_cast<int>(order.size());
  std::vector<int> slot_start(arity), slot_exit(arity);
  for (int i = 0; i < arity; ++i) {
    slot_start[i] = nfa.add_state();
    slot_exit[i] = nfa.add_state();
  }
  nfa.add_edge(expect_tuple, '(', slot_start[0]);
  for (int i = 0; i < arity; ++i) {
    const Trie* fragment = nullptr;
    switch (order[i]) {
      case ElementKind::AspectTerm:
        fragment = &phrase_trie;
        nfa.add_eps(slot_start[i], nfa.splice(null_trie, slot_exit[i]));
        break;
      case ElementKind::OpinionTerm:
        fragment = &phrase_trie;
        break;
      case ElementKind::AspectCategory:
        fragment = category_trie_.get();
        break;
      case ElementKind::Polarity:
        fragment = polarity_trie_.get();
        break;
    }
    nfa.add_eps(slot_start[i], nfa.splice(*fragment, slot_exit[i]));
    if (i + 1 < arity) {
      append_literal_chain(nfa, slot_exit[i], kElementSeparator, slot_start[i + 1]);
    }
  }
  int after_tuple = nfa.add_state();
  nfa.add_edge(slot_exit[arity - 1], ')', after_tuple);
  nfa.add_edge(after_tuple, ']', nfa.accept);
  append_literal_chain(nfa, after_tuple, kElementSeparator, expect_tuple);

  SubsetBuilder builder(nfa);
  return std::make_shared<const GrammarAutomaton>(builder.build());
}

std::shared_ptr<const GrammarAutomaton> compile(const TupleSchema& schema) {
  check_schema(schema);
  GrammarCompiler compiler(schema.categories);
  return compiler.compile(schema.lexicon, schema.permutation);
}

// ---------------------------------------------------------------------------
// Parsing and formatting the canonical surface form.
// ---------------------------------------------------------------------------

namespace {

class TupleReader {
 public:
  TupleReader(std::string_view text, const TupleSchema& schema)
      : text_(text),
        order_(schema.permutation.order()),
        phrase_trie_(Trie::from(schema.lexicon->spans())),
        aspect_trie_(phrase_trie_),
        category_trie_(Trie::from(schema.categories->categories())),
        polarity_trie_(Trie::from(polarity_names())) {
    // Only the aspect slot has the NULL alternative; opinion terms must be
    // actual phrases.
    aspect_trie_.insert(kNullAspectMarker);
  }

  bool read(std::vector<SentimentTuple>& out) {
    if (text_.empty() || text_[0] != '[') return false;
    return read_list(1, out);
  }

 private:
  bool read_list(std::size_t pos, std::vector<SentimentTuple>& out) {
    SentimentTuple tuple;
    return read_slot(pos, 0, tuple, [&](std::size_t end, const SentimentTuple& t) {
      if (end < text_.size() && text_[end] == ']') {
        if (end + 1 != text_.size()) return false;
        out.push_back(t);
        return true;
      }
      if (end + 1 < text_.size() && text_[end] == ',' && text_[end + 1] == ' ') {
        std::vector<SentimentTuple> rest;
        if (read_list(end + 2, rest)) {
          out.push_back(t);
          out.insert(out.end(), rest.begin(), rest.end());
          return true;
        }
      }
      return false;
    });
  }

  using Continuation = std::function<bool(std::size_t, const SentimentTuple&)>;

  // Parses one tuple starting at the '(' expected at `pos`; slot == 0 consumes
  // the '('. Candidate terminals are tried longest first so the parse is
  // deterministic even when spans overlap the separator.
  bool read_slot(std::size_t pos, int slot, SentimentTuple& tuple,
                 const Continuation& done) {
    if (slot == 0) {
      if (pos >= text_.size() || text_[pos] != '(') return false;
      ++pos;
    }
    const Trie& trie = trie_for(order_[slot]);
    std::vector<std::size_t> lengths = trie.match_lengths(text_, pos);
    for (auto it = lengths.rbegin(); it != lengths.rend(); ++it) {
      std::size_t len = *it;
      if (len == 0) continue;
      assign(tuple, order_[slot], text_.substr(pos, len));
      std::size_t after = pos + len;
      if (slot + 1 == static_cast<int>(order_.size())) {
        if (after < text_.size() && text_[after] == ')') {
          if (done(after + 1, tuple)) return true;
        }
      } else if (after + 1 < text_.size() && text_[after] == ',' &&
                 text_[after + 1] == ' ') {
        if (read_slot(after + 2, slot + 1, tuple, done)) return true;
      }
    }
    return false;
  }

  const Trie& trie_for(ElementKind kind) const {
    switch (kind) {
      case ElementKind::AspectTerm: return aspect_trie_;
      case ElementKind::OpinionTerm: return phrase_trie_;
      case ElementKind::AspectCategory: return category_trie_;
      case ElementKind::Polarity: return polarity_trie_;
    }
    throw InputError("unknown element kind");
  }

  void assign(SentimentTuple& tuple, ElementKind kind, std::string_view value) {
    switch (kind) {
      case ElementKind::AspectTerm:
        tuple.aspect_term = std::string(value);
        break;
      case ElementKind::AspectCategory:
        tuple.aspect_category = std::string(value);
        break;
      case ElementKind::OpinionTerm:
        tuple.opinion_term = std::string(value);
        break;
      case ElementKind::Polarity:
        tuple.polarity = polarity_from_name(std::string(value));
        break;
    }
  }

  std::string_view text_;
  const std::vector<ElementKind>& order_;
  Trie phrase_trie_;
  Trie aspect_trie_;
  Trie category_trie_;
  Trie polarity_trie_;
};

}  // namespace

std::vector<SentimentTuple> parse_tuples(std::string_view output,
                                         const TupleSchema& schema) {
  check_schema(schema);
  TupleReader reader(output, schema);
  std::vector<SentimentTuple> raw;
  if (!reader.read(raw)) {
    throw ParseError("output is not in the schema's language: " +
                     std::string(output));
  }
  std::set<SentimentTuple> unique(raw.begin(), raw.end());
  return std::vector<SentimentTuple>(unique.begin(), unique.end());
}

std::string format_tuples(std::vector<SentimentTuple> tuples,
                          const Permutation& permutation) {
  if (tuples.empty()) {
    throw InputError("the tuple grammar has no empty-list form");
  }
  std::sort(tuples.begin(), tuples.end());
  tuples.erase(std::unique(tuples.begin(), tuples.end()), tuples.end());

  std::string out = "[";
  bool first_tuple = true;
  for (const auto& tuple : tuples) {
    if (!first_tuple) out += kElementSeparator;
    first_tuple = false;
    out += '(';
    bool first_slot = true;
    for (ElementKind kind : permutation.order()) {
      if (!first_slot) out += kElementSeparator;
      first_slot = false;
      switch (kind) {
        case ElementKind::AspectTerm:
          out += tuple.aspect_term;
          break;
        case ElementKind::AspectCategory:
          out += tuple.aspect_category;
          break;
        case ElementKind::OpinionTerm:
          if (!tuple.opinion_term) {
            throw InputError("ASQP tuple is missing its opinion term");
          }
          out += *tuple.opinion_term;
          break;
        case ElementKind::Polarity:
          out += polarity_name(tuple.polarity);
          break;
      }
    }
    out += ')';
  }
  out += ']';
  return out;
}

namespace {

std::string ebnf_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

std::string ebnf_alternation(const std::vector<std::string>& options) {
  std::string out;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i > 0) out += " | ";
    out += ebnf_quote(options[i]);
  }
  return out;
}

}  // namespace

std::string schema_to_ebnf(const TupleSchema& schema) {
  check_schema(schema);
  const auto& order = schema.permutation.order();
  std::string out = "root ::= \"[\" tuple (\", \" tuple)* \"]\"\n";
  out += "tuple ::= \"(\"";
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0) out += " \", \"";
    out += " e";
    out += element_code(order[i]);
  }
  out += " \")\"\n";
  for (ElementKind kind : order) {
    out += "e";
    out += element_code(kind);
    out += " ::= ";
    switch (kind) {
      case ElementKind::AspectTerm:
        out += "phrase | \"NULL\"";
        break;
      case ElementKind::OpinionTerm:
        out += "phrase";
        break;
      case ElementKind::AspectCategory:
        out += ebnf_alternation(schema.categories->categories());
        break;
      case ElementKind::Polarity:
        out += ebnf_alternation(polarity_names());
        break;
    }
    out += '\n';
  }
  out += "phrase ::= " + ebnf_alternation(schema.lexicon->spans()) + "\n";
  return out;
}

}  // namespace mvabsa
