#include "mvabsa/multiview.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mvabsa/grammar.hpp"
#include "mvabsa/lexicon.hpp"

namespace mvabsa {

const char* strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::Mvp: return "mvp";
    case Strategy::SingleOrder: return "single_order";
    case Strategy::SelfConsistency: return "self_consistency";
    case Strategy::MvpEff: return "mvp_eff";
  }
  throw ConfigError("unknown strategy");
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "mvp") return Strategy::Mvp;
  if (name == "single_order") return Strategy::SingleOrder;
  if (name == "self_consistency") return Strategy::SelfConsistency;
  if (name == "mvp_eff") return Strategy::MvpEff;
  throw ConfigError("unknown strategy: " + name);
}

int default_view_count(const Task& task) {
  return task.kind() == TaskKind::TASD ? 5 : 17;
}

std::vector<std::size_t> select_top_m_indices(const std::vector<ViewPrediction>& views,
                                              int m) {
  if (m < 1) {
    throw ConfigError("m must be at least 1");
  }
  if (m > static_cast<int>(views.size())) {
    throw ConfigError("m = " + std::to_string(m) + " exceeds the " +
                      std::to_string(views.size()) + " available views");
  }
  std::vector<std::size_t> indices(views.size());
  std::iota(indices.begin(), indices.end(), 0);
  std::sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
    if (views[a].record.mean_entropy != views[b].record.mean_entropy) {
      return views[a].record.mean_entropy < views[b].record.mean_entropy;
    }
    return views[a].permutation_id < views[b].permutation_id;
  });
  indices.resize(m);
  return indices;
}

std::vector<ViewPrediction> select_top_m(const std::vector<ViewPrediction>& views,
                                         int m) {
  std::vector<ViewPrediction> selected;
  selected.reserve(m);
  for (std::size_t idx : select_top_m_indices(views, m)) {
    selected.push_back(views[idx]);
  }
  return selected;
}

std::vector<SentimentTuple> majority_vote(const std::vector<ViewPrediction>& selected,
                                          std::map<std::string, int>* counts) {
  if (selected.empty()) {
    throw ConfigError("majority vote over zero views");
  }
  std::map<SentimentTuple, int> tally;
  for (const ViewPrediction& view : selected) {
    for (const SentimentTuple& tuple : view.tuples) {
      ++tally[tuple];
    }
  }
  int m = static_cast<int>(selected.size());
  std::vector<SentimentTuple> kept;
  for (const auto& [tuple, count] : tally) {
    if (counts) (*counts)[tuple.to_string()] = count;
    if (2 * count > m) kept.push_back(tuple);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// MultiViewEngine
// ---------------------------------------------------------------------------

MultiViewEngine::MultiViewEngine(EngineConfig config, Backend& backend)
    : config_(std::move(config)), backend_(backend), compiler_(config_.categories) {
  if (!config_.categories) {
    throw ConfigError("engine needs a category set");
  }
}

ScheduledRequest MultiViewEngine::make_request(const Instance& instance,
                                               const Permutation& permutation,
                                               const TupleSchema& schema,
                                               double temperature,
                                               std::optional<uint64_t> seed) const {
  RenderedPrompt prompt =
      render(config_.prompt_template, permutation, config_.shots, instance);

  ScheduledRequest scheduled;
  scheduled.request.prompt = prompt.full();
  if (config_.constrain) {
    // The automaton is compiled by the backend at decode time so only
    // in-flight requests hold one.
    scheduled.request.constraint = DecodeConstraint{schema, nullptr};
  }
  scheduled.request.stop_sequence = config_.stop_sequence;
  scheduled.request.max_tokens = config_.max_tokens;
  scheduled.request.temperature = temperature;
  scheduled.request.seed = seed;
  scheduled.request.instance_id = instance.id;
  scheduled.request.permutation_id = permutation.id();
  scheduled.group_key = config_.dataset_tag + "|" + config_.shot_tag + "|" +
                        task_name(config_.task.kind()) + "|" + permutation.id();
  scheduled.prefix = std::move(prompt.prefix);
  scheduled.suffix = std::move(prompt.suffix);
  return scheduled;
}

AggregatedPrediction MultiViewEngine::aggregate_mvp(
    const Instance& instance, std::vector<ViewPrediction> views) const {
  int m = config_.selection.m.value_or(default_view_count(config_.task));
  std::vector<std::size_t> winners = select_top_m_indices(views, m);
  for (std::size_t idx : winners) views[idx].selected = true;

  std::vector<ViewPrediction> selected;
  selected.reserve(winners.size());
  for (std::size_t idx : winners) selected.push_back(views[idx]);

  AggregatedPrediction prediction;
  prediction.instance_id = instance.id;
  prediction.m = m;
  prediction.strategy = strategy_name(Strategy::Mvp);
  prediction.tuples = majority_vote(selected, &prediction.vote_counts);
  prediction.views = std::move(views);
  return prediction;
}

RunResult MultiViewEngine::run_mvp(const std::vector<Instance>& instances) {
  std::vector<Permutation> permutations = all_permutations(config_.task);
  std::size_t n = instances.size();

  std::vector<TupleSchema> schemas;  // one per (permutation, instance)
  std::vector<ScheduledRequest> requests;
  schemas.reserve(permutations.size() * n);
  requests.reserve(permutations.size() * n);

  std::vector<std::shared_ptr<const PhraseLexicon>> lexicons;
  lexicons.reserve(n);
  for (const Instance& instance : instances) {
    lexicons.push_back(std::make_shared<PhraseLexicon>(build_lexicon(instance.text)));
  }

  for (const Permutation& permutation : permutations) {
    for (std::size_t i = 0; i < n; ++i) {
      TupleSchema schema{permutation, lexicons[i], config_.categories};
      requests.push_back(
          make_request(instances[i], permutation, schema, 0.0, std::nullopt));
      schemas.push_back(std::move(schema));
    }
  }

  std::vector<PrefixGroup> groups = config_.prefix_grouping
                                        ? schedule(requests)
                                        : schedule_ungrouped(requests);
  RunResult result;
  result.ledger = account(groups, requests,
                          [&](const std::string& s) { return backend_.count_tokens(s); });
  std::vector<GenerationRecord> records =
      dispatch(groups, requests, backend_, config_.dispatch);
  add_generation_counts(result.ledger, records);

  result.predictions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<ViewPrediction> views;
    views.reserve(permutations.size());
    for (std::size_t p = 0; p < permutations.size(); ++p) {
      std::size_t idx = p * n + i;
      ViewPrediction view;
      view.permutation_id = permutations[p].id();
      view.tuples = parse_tuples(records[idx].text, schemas[idx]);
      view.record = std::move(records[idx]);
      views.push_back(std::move(view));
    }
    result.predictions.push_back(aggregate_mvp(instances[i], std::move(views)));
  }
  return result;
}

RunResult MultiViewEngine::run_single_order(const std::vector<Instance>& instances) {
  Permutation permutation = identity_permutation(config_.task);
  std::size_t n = instances.size();

  std::vector<TupleSchema> schemas;
  std::vector<ScheduledRequest> requests;
  schemas.reserve(n);
  requests.reserve(n);
  for (const Instance& instance : instances) {
    TupleSchema schema{permutation,
                       std::make_shared<PhraseLexicon>(build_lexicon(instance.text)),
                       config_.categories};
    requests.push_back(
        make_request(instance, permutation, schema, 0.0, std::nullopt));
    schemas.push_back(std::move(schema));
  }

  std::vector<PrefixGroup> groups = config_.prefix_grouping
                                        ? schedule(requests)
                                        : schedule_ungrouped(requests);
  RunResult result;
  result.ledger = account(groups, requests,
                          [&](const std::string& s) { return backend_.count_tokens(s); });
  std::vector<GenerationRecord> records =
      dispatch(groups, requests, backend_, config_.dispatch);
  add_generation_counts(result.ledger, records);

  result.predictions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ViewPrediction view;
    view.permutation_id = permutation.id();
    view.tuples = parse_tuples(records[i].text, schemas[i]);
    view.record = std::move(records[i]);
    view.selected = true;

    AggregatedPrediction prediction;
    prediction.instance_id = instances[i].id;
    prediction.m = 1;
    prediction.strategy = strategy_name(Strategy::SingleOrder);
    prediction.tuples = majority_vote({view}, &prediction.vote_counts);
    prediction.views.push_back(std::move(view));
    result.predictions.push_back(std::move(prediction));
  }
  return result;
}

RunResult MultiViewEngine::run_self_consistency(const std::vector<Instance>& instances) {
  Permutation permutation = identity_permutation(config_.task);
  std::size_t n = instances.size();
  int samples = config_.selection.sc_samples;
  if (samples < 1) {
    throw ConfigError("self-consistency needs at least one sample");
  }

  std::vector<TupleSchema> schemas;
  schemas.reserve(n);
  for (const Instance& instance : instances) {
    schemas.push_back(TupleSchema{
        permutation, std::make_shared<PhraseLexicon>(build_lexicon(instance.text)),
        config_.categories});
  }

  std::vector<ScheduledRequest> requests;
  requests.reserve(n * samples);
  for (int s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      requests.push_back(make_request(instances[i], permutation, schemas[i],
                                      config_.selection.sc_temperature,
                                      config_.sc_seed_base + s));
    }
  }

  std::vector<PrefixGroup> groups = config_.prefix_grouping
                                        ? schedule(requests)
                                        : schedule_ungrouped(requests);
  RunResult result;
  result.ledger = account(groups, requests,
                          [&](const std::string& s) { return backend_.count_tokens(s); });
  std::vector<GenerationRecord> records =
      dispatch(groups, requests, backend_, config_.dispatch);
  add_generation_counts(result.ledger, records);

  result.predictions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<ViewPrediction> views;
    views.reserve(samples);
    for (int s = 0; s < samples; ++s) {
      std::size_t idx = static_cast<std::size_t>(s) * n + i;
      ViewPrediction view;
      view.permutation_id = permutation.id();
      view.tuples = parse_tuples(records[idx].text, schemas[i]);
      view.record = std::move(records[idx]);
      view.selected = true;
      views.push_back(std::move(view));
    }
    AggregatedPrediction prediction;
    prediction.instance_id = instances[i].id;
    prediction.m = samples;
    prediction.strategy = strategy_name(Strategy::SelfConsistency);
    prediction.tuples = majority_vote(views, &prediction.vote_counts);
    prediction.views = std::move(views);
    result.predictions.push_back(std::move(prediction));
  }
  return result;
}

RunResult MultiViewEngine::run_mvp_eff(const std::vector<Instance>& instances) {
  RunResult single = run_single_order(instances);

  EffRoutingInfo info;
  std::vector<std::pair<double, std::string>> ranked;
  ranked.reserve(instances.size());
  for (const AggregatedPrediction& prediction : single.predictions) {
    const GenerationRecord& record = prediction.views.front().record;
    double total = 0.0;
    for (double c : record.per_token_confidence) total += c;
    double confidence =
        record.per_token_confidence.empty()
            ? 0.0
            : total / static_cast<double>(record.per_token_confidence.size());
    info.confidences[prediction.instance_id] = confidence;
    ranked.push_back({confidence, prediction.instance_id});
  }
  std::sort(ranked.begin(), ranked.end());

  std::size_t quota = static_cast<std::size_t>(
      std::floor(config_.selection.eff_quantile * static_cast<double>(instances.size())));
  quota = std::min(quota, instances.size());
  std::set<std::string> escalated;
  for (std::size_t i = 0; i < quota; ++i) {
    escalated.insert(ranked[i].second);
  }
  info.escalated_ids.assign(escalated.begin(), escalated.end());

  std::vector<Instance> to_escalate;
  for (const Instance& instance : instances) {
    if (escalated.count(instance.id)) to_escalate.push_back(instance);
  }

  RunResult result;
  result.ledger = single.ledger;
  if (!to_escalate.empty()) {
    RunResult full = run_mvp(to_escalate);
    result.ledger += full.ledger;
    std::map<std::string, AggregatedPrediction*> by_id;
    for (AggregatedPrediction& p : full.predictions) by_id[p.instance_id] = &p;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      auto it = by_id.find(instances[i].id);
      if (it != by_id.end()) {
        result.predictions.push_back(std::move(*it->second));
      } else {
        result.predictions.push_back(std::move(single.predictions[i]));
      }
    }
  } else {
    result.predictions = std::move(single.predictions);
  }
  result.eff = std::move(info);
  return result;
}

RunResult MultiViewEngine::run(const std::vector<Instance>& instances) {
  switch (config_.selection.strategy) {
    case Strategy::Mvp: return run_mvp(instances);
    case Strategy::SingleOrder: return run_single_order(instances);
    case Strategy::SelfConsistency: return run_self_consistency(instances);
    case Strategy::MvpEff: return run_mvp_eff(instances);
  }
  throw ConfigError("unknown strategy");
}

AggregatedPrediction MultiViewEngine::run_instance(const Instance& instance) {
  RunResult result = run({instance});
  return std::move(result.predictions.front());
}

}  // namespace mvabsa
