#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mvabsa/backend.hpp"
#include "mvabsa/core.hpp"
#include "mvabsa/prompt.hpp"
#include "mvabsa/scheduler.hpp"

namespace mvabsa {

enum class Strategy {
  Mvp,             // all permutations, top-m by entropy, majority vote
  SingleOrder,     // one decode under the task's natural order
  SelfConsistency, // five sampled decodes of the single-order prompt
  MvpEff,          // single-order everywhere, full mvp on the low-confidence quartile
};

const char* strategy_name(Strategy strategy);
Strategy strategy_from_name(const std::string& name);

struct ViewSelectionConfig {
  std::optional<int> m;  // defaults: 5 for TASD, 17 for ASQP
  Strategy strategy = Strategy::Mvp;
  int sc_samples = 5;
  double sc_temperature = 0.8;
  double eff_quantile = 0.25;
};

// The empirically best ensemble sizes: 5 for TASD, 17 for ASQP.
int default_view_count(const Task& task);

// One decoded view of an instance.
struct ViewPrediction {
  std::string permutation_id;
  GenerationRecord record;
  std::vector<SentimentTuple> tuples;  // parsed, deduplicated, sorted
  bool selected = false;
};

// The per-instance outcome: voted tuples plus every view record for audit.
struct AggregatedPrediction {
  std::string instance_id;
  std::vector<SentimentTuple> tuples;
  std::vector<ViewPrediction> views;
  std::map<std::string, int> vote_counts;  // canonical tuple string -> count
  std::string strategy;  // the path that actually produced this instance
  int m = 0;
};

// Indices of the m lowest-entropy views, ties broken by canonical
// permutation-id order. Throws ConfigError when m exceeds the view count.
std::vector<std::size_t> select_top_m_indices(const std::vector<ViewPrediction>& views,
                                              int m);
std::vector<ViewPrediction> select_top_m(const std::vector<ViewPrediction>& views,
                                         int m);

// Keep a tuple iff it appears in strictly more than half of the selected
// views. Returns the kept set sorted canonically; `counts`, when given,
// receives the full vote tally.
std::vector<SentimentTuple> majority_vote(const std::vector<ViewPrediction>& selected,
                                          std::map<std::string, int>* counts = nullptr);

struct EngineConfig {
  Task task = Task(TaskKind::ASQP);
  std::shared_ptr<const CategorySet> categories;
  PromptTemplate prompt_template;
  std::vector<Instance> shots;
  ViewSelectionConfig selection;
  int max_tokens = 2048;
  std::string stop_sequence = ")]";
  bool prefix_grouping = true;
  bool constrain = true;  // attach the compiled schema to every request
  DispatchOptions dispatch;
  std::string dataset_tag = "dataset";
  std::string shot_tag = "shots";
  uint64_t sc_seed_base = 1;  // self-consistency samples use base + index
};

struct EffRoutingInfo {
  std::vector<std::string> escalated_ids;           // sorted
  std::map<std::string, double> confidences;        // per instance id
};

struct RunResult {
  std::vector<AggregatedPrediction> predictions;  // in instance order
  CostLedger ledger;
  std::optional<EffRoutingInfo> eff;
};

// Orchestrates one strategy over a test set: renders prompts, compiles
// schemas, schedules by shared prefix, decodes, and aggregates. Results are
// deterministic regardless of dispatch interleaving.
class MultiViewEngine {
 public:
  MultiViewEngine(EngineConfig config, Backend& backend);

  RunResult run(const std::vector<Instance>& instances);

  // Single-instance convenience used by tests.
  AggregatedPrediction run_instance(const Instance& instance);

  const EngineConfig& config() const { return config_; }

 private:
  struct ViewPlan {
    std::size_t instance_index;
    Permutation permutation;
    TupleSchema schema;
  };

  RunResult run_decodes(const std::vector<Instance>& instances,
                        const std::vector<Permutation>& permutations,
                        bool sample_mode);
  RunResult run_mvp(const std::vector<Instance>& instances);
  RunResult run_single_order(const std::vector<Instance>& instances);
  RunResult run_self_consistency(const std::vector<Instance>& instances);
  RunResult run_mvp_eff(const std::vector<Instance>& instances);

  ScheduledRequest make_request(const Instance& instance,
                                const Permutation& permutation,
                                const TupleSchema& schema,
                                double temperature,
                                std::optional<uint64_t> seed) const;
  AggregatedPrediction aggregate_mvp(const Instance& instance,
                                     std::vector<ViewPrediction> views) const;

  EngineConfig config_;
  Backend& backend_;
  GrammarCompiler compiler_;
};

}  // namespace mvabsa
