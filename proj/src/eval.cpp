#include "mvabsa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace mvabsa {

MatchCounts match(const std::vector<SentimentTuple>& gold,
                  const std::vector<SentimentTuple>& pred) {
  std::set<SentimentTuple> gold_set(gold.begin(), gold.end());
  std::set<SentimentTuple> pred_set(pred.begin(), pred.end());
  MatchCounts counts;
  for (const SentimentTuple& t : pred_set) {
    if (gold_set.count(t)) {
      ++counts.true_positives;
    } else {
      ++counts.false_positives;
    }
  }
  counts.false_negatives =
      static_cast<long long>(gold_set.size()) - counts.true_positives;
  return counts;
}

double precision_of(const MatchCounts& counts) {
  long long denom = counts.true_positives + counts.false_positives;
  if (denom == 0) return 0.0;
  return static_cast<double>(counts.true_positives) / static_cast<double>(denom);
}

double recall_of(const MatchCounts& counts) {
  long long denom = counts.true_positives + counts.false_negatives;
  if (denom == 0) return 0.0;
  return static_cast<double>(counts.true_positives) / static_cast<double>(denom);
}

double f1_of(const MatchCounts& counts) {
  double p = precision_of(counts);
  double r = recall_of(counts);
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

double instance_f1(const MatchCounts& counts, bool gold_empty, bool pred_empty) {
  if (gold_empty && pred_empty) return 1.0;
  return f1_of(counts);
}

MetricReport evaluate(
    const std::vector<Instance>& gold_instances,
    const std::map<std::string, std::vector<SentimentTuple>>& predictions) {
  if (gold_instances.empty()) {
    throw EvalError("no gold instances to evaluate against");
  }
  MetricReport report;
  double macro_sum = 0.0;
  for (const Instance& instance : gold_instances) {
    if (!instance.gold) {
      throw EvalError("instance '" + instance.id + "' carries no gold annotation");
    }
    static const std::vector<SentimentTuple> kEmpty;
    auto it = predictions.find(instance.id);
    const std::vector<SentimentTuple>& pred =
        it == predictions.end() ? kEmpty : it->second;

    MetricReport::PerInstance entry;
    entry.id = instance.id;
    entry.counts = match(*instance.gold, pred);
    entry.f1 = instance_f1(entry.counts, instance.gold->empty(), pred.empty());
    macro_sum += entry.f1;
    report.totals += entry.counts;
    report.per_instance.push_back(std::move(entry));
  }
  report.micro_precision = precision_of(report.totals);
  report.micro_recall = recall_of(report.totals);
  report.micro_f1 = f1_of(report.totals);
  report.macro_f1 = macro_sum / static_cast<double>(gold_instances.size());
  return report;
}

std::string format_score(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value * 100.0);
  return buf;
}

}  // namespace mvabsa
