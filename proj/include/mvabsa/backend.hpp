#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvabsa/core.hpp"
#include "mvabsa/error.hpp"
#include "mvabsa/grammar.hpp"
#include "mvabsa/vocabulary.hpp"

namespace mvabsa {

// Next-token distribution reported by a backend. `coverage` is the fraction
// of total probability mass represented: 1.0 for the oracle simulator, <= 1.0
// for remote top-k logprobs. Entropy is always computed on the renormalized
// support.
struct TokenDistribution {
  std::vector<std::pair<int, double>> probabilities;  // token id -> probability
  double coverage = 1.0;
};

// Shannon entropy in nats over the renormalized support, with 0*ln(0) := 0.
// Throws InputError on an all-zero distribution or mass above 1 + 1e-9.
double entropy(const TokenDistribution& dist);

// One complete decode: emitted tokens, their distributions, and the derived
// confidence and entropy series.
struct GenerationRecord {
  std::vector<int> tokens;
  std::string text;
  std::vector<TokenDistribution> per_token;
  std::vector<double> per_token_entropy;    // nats
  std::vector<double> per_token_confidence; // probability of the emitted token
  double mean_entropy = 0.0;
};

// Arithmetic mean of the per-token entropies. Throws InputError on an empty
// generation.
double mean_entropy(const GenerationRecord& record);

// Grammar constraint attached to a decode: the schema plus its compiled
// automaton (compiled once by the caller, shared across steps).
struct DecodeConstraint {
  TupleSchema schema;
  std::shared_ptr<const GrammarAutomaton> automaton;
};

struct DecodeRequest {
  std::string prompt;
  std::optional<DecodeConstraint> constraint;
  std::string stop_sequence = ")]";
  int max_tokens = 256;
  double temperature = 0.0;
  std::optional<uint64_t> seed;
  // Request markers: which instance and view this prompt stands for. The
  // oracle simulator resolves its target from these; remote backends ignore
  // them beyond diagnostics.
  std::string instance_id;
  std::string permutation_id;
};

// Language-model contract. Implementations must tolerate concurrent decode
// calls.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual GenerationRecord decode(const DecodeRequest& request) = 0;

  // Prompt-side token accounting (also used by the cost ledger).
  virtual int count_tokens(const std::string& text) const = 0;

  int max_context_tokens() const { return max_context_tokens_; }
  void set_max_context_tokens(int tokens) { max_context_tokens_ = tokens; }

  // Non-null for backends that expose per-step logit control.
  virtual const TokenizerVocabulary* vocabulary() const { return nullptr; }

 protected:
  // prompt + generation budget must fit the context window.
  void check_context_budget(const DecodeRequest& request) const;

 private:
  int max_context_tokens_ = 16384;
};

// How the oracle corrupts a view's output. A corrupted view emits an altered
// gold tuple set and per-token distributions at `corrupted_entropy` nats;
// clean views run at `clean_entropy`.
struct OracleCorruption {
  enum class Mode { FlipPolarity, DropTuple };

  double probability = 0.0;          // independent per (instance, view)
  std::optional<int> count;          // or: exactly this many views per instance
  double corrupted_entropy = 0.9;    // nats per generated token
  double clean_entropy = 0.0;
  Mode mode = Mode::FlipPolarity;
};

// Deterministic desk-scale simulator: for a request marked with (instance id,
// permutation id) it emits the gold tuple set formatted under that
// permutation, optionally corrupted per the corruption spec, with
// distributions whose entropy reflects the corruption level. Byte-level
// vocabulary; full-coverage distributions.
class OracleBackend : public Backend {
 public:
  OracleBackend(Task task,
                std::map<std::string, std::vector<SentimentTuple>> gold,
                OracleCorruption corruption, uint64_t seed);

  // JSON config: {"task": "asqp", "seed": 1, "clean_entropy": 0.0,
  //   "corruption": {"probability": 0.3, "entropy": 0.9, "mode":
  //   "flip_polarity", "count": 2}, "instances": {"id": [tuple, ...], ...}}
  static OracleBackend from_json_file(const std::string& path);
  static OracleBackend from_json(const std::string& content);

  GenerationRecord decode(const DecodeRequest& request) override;
  int count_tokens(const std::string& text) const override;
  const TokenizerVocabulary* vocabulary() const override { return &vocab_; }

  const Task& task() const { return task_; }

  // Whether a given view would be corrupted; sample_seed participates only
  // for sampling decodes (temperature > 0), mirroring seed-dependent
  // self-consistency noise.
  bool is_corrupted(const std::string& instance_id,
                    const std::string& permutation_id,
                    std::optional<uint64_t> sample_seed) const;

  // The altered tuple set a corrupted view emits for this instance.
  std::vector<SentimentTuple> corrupted_gold(const std::string& instance_id) const;

 private:
  const std::vector<SentimentTuple>& gold_for(const std::string& instance_id) const;

  Task task_;
  std::map<std::string, std::vector<SentimentTuple>> gold_;
  OracleCorruption corruption_;
  uint64_t seed_;
  TokenizerVocabulary vocab_;
};

// Two-point-plus-alternatives distribution builder used by the oracle: puts
// weight p on `target` and (1-p)/|alternatives| on each alternative so that
// the entropy equals `nats`. Exposed for tests.
TokenDistribution distribution_with_entropy(int target,
                                            const std::vector<int>& alternatives,
                                            double nats);

}  // namespace mvabsa
