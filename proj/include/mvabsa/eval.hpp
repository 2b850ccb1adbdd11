#pragma once

#include <map>
#include <string>
#include <vector>

#include "mvabsa/core.hpp"
#include "mvabsa/error.hpp"

namespace mvabsa {

struct MatchCounts {
  long long true_positives = 0;
  long long false_positives = 0;
  long long false_negatives = 0;

  MatchCounts& operator+=(const MatchCounts& other) {
    true_positives += other.true_positives;
    false_positives += other.false_positives;
    false_negatives += other.false_negatives;
    return *this;
  }
};

// Exact-match tuple comparison under set semantics: duplicates on either
// side are collapsed before counting, every field must match byte for byte.
MatchCounts match(const std::vector<SentimentTuple>& gold,
                  const std::vector<SentimentTuple>& pred);

// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); 0/0 -> 0 throughout.
double precision_of(const MatchCounts& counts);
double recall_of(const MatchCounts& counts);
double f1_of(const MatchCounts& counts);

// Per-instance F1 for the macro average: both sides empty -> 1, otherwise the
// plain F1 (0 when nothing overlaps).
double instance_f1(const MatchCounts& counts, bool gold_empty, bool pred_empty);

struct MetricReport {
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  MatchCounts totals;

  struct PerInstance {
    std::string id;
    MatchCounts counts;
    double f1 = 0.0;
  };
  std::vector<PerInstance> per_instance;

  // Run metadata echoed into the report.
  std::map<std::string, std::string> metadata;
};

// Score a prediction map against gold instances. Instances without gold
// annotations raise EvalError; instances missing from `predictions` count as
// empty predictions.
MetricReport evaluate(const std::vector<Instance>& gold_instances,
                      const std::map<std::string, std::vector<SentimentTuple>>& predictions);

// Paper-style rendering: scores x100 at two decimals (e.g. "54.94").
std::string format_score(double value);

}  // namespace mvabsa
