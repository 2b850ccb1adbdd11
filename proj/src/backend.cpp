#include "mvabsa/backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mvabsa {

double entropy(const TokenDistribution& dist) {
  double sum = 0.0;
  for (const auto& [id, p] : dist.probabilities) {
    if (p < 0.0) {
      throw InputError("distribution has a negative probability");
    }
    sum += p;
  }
  if (sum <= 0.0) {
    throw InputError("distribution carries no probability mass");
  }
  if (sum > 1.0 + 1e-9) {
    throw InputError("distribution mass exceeds 1");
  }
  double h = 0.0;
  for (const auto& [id, p] : dist.probabilities) {
    if (p == 0.0) continue;
    double q = p / sum;
    h -= q * std::log(q);
  }
  return std::max(h, 0.0);
}

double mean_entropy(const GenerationRecord& record) {
  if (record.per_token_entropy.empty()) {
    throw InputError("cannot average the entropy of an empty generation");
  }
  double sum = 0.0;
  for (double h : record.per_token_entropy) sum += h;
  return sum / static_cast<double>(record.per_token_entropy.size());
}

void Backend::check_context_budget(const DecodeRequest& request) const {
  int prompt_tokens = count_tokens(request.prompt);
  if (prompt_tokens + request.max_tokens > max_context_tokens()) {
    throw BackendError("context length exceeded: prompt " +
                       std::to_string(prompt_tokens) + " tokens + " +
                       std::to_string(request.max_tokens) +
                       " generation budget > " +
                       std::to_string(max_context_tokens()));
  }
}

// ---------------------------------------------------------------------------
// Oracle simulator
// ---------------------------------------------------------------------------

namespace {

uint64_t fnv1a(uint64_t h, const void* data, std::size_t len) {
  const unsigned char* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t fnv1a_str(uint64_t h, const std::string& s) {
  return fnv1a(h, s.data(), s.size());
}

uint64_t fnv1a_u64(uint64_t h, uint64_t v) { return fnv1a(h, &v, sizeof(v)); }

constexpr uint64_t kFnvBasis = 14695981039346656037ULL;

double to_unit_interval(uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

TokenDistribution distribution_with_entropy(int target,
                                            const std::vector<int>& alternatives,
                                            double nats) {
  TokenDistribution dist;
  if (nats <= 0.0 || alternatives.empty()) {
    dist.probabilities = {{target, 1.0}};
    return dist;
  }
  double k = static_cast<double>(alternatives.size());
  double max_entropy = std::log(k + 1.0);
  if (nats >= max_entropy) {
    throw InputError("requested entropy " + std::to_string(nats) +
                     " exceeds ln(" + std::to_string(alternatives.size() + 1) +
                     ") for this support size");
  }
  // H(p) = -p ln p - (1-p) ln((1-p)/k) is strictly decreasing on
  // [1/(k+1), 1), from ln(k+1) down to 0; bisect for p.
  auto h = [&](double p) {
    double rest = (1.0 - p) / k;
    double v = -p * std::log(p);
    if (rest > 0.0) v -= (1.0 - p) * std::log(rest);
    return v;
  };
  double lo = 1.0 / (k + 1.0);
  double hi = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (h(mid) > nats) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double p = 0.5 * (lo + hi);
  dist.probabilities.push_back({target, p});
  for (int alt : alternatives) {
    dist.probabilities.push_back({alt, (1.0 - p) / k});
  }
  std::sort(dist.probabilities.begin(), dist.probabilities.end());
  return dist;
}

OracleBackend::OracleBackend(
    Task task, std::map<std::string, std::vector<SentimentTuple>> gold,
    OracleCorruption corruption, uint64_t seed)
    : task_(task),
      gold_(std::move(gold)),
      corruption_(corruption),
      seed_(seed),
      vocab_(TokenizerVocabulary::byte_vocabulary()) {
  for (const auto& [id, tuples] : gold_) {
    if (tuples.empty()) {
      throw ConfigError("oracle gold for instance '" + id +
                        "' is empty; the grammar has no empty-list form");
    }
    for (const auto& t : tuples) {
      if (task_.has_opinion_term() != t.opinion_term.has_value()) {
        throw ConfigError("oracle gold for instance '" + id +
                          "' does not match the task's field presence rules");
      }
    }
  }
}

const std::vector<SentimentTuple>& OracleBackend::gold_for(
    const std::string& instance_id) const {
  auto it = gold_.find(instance_id);
  if (it == gold_.end()) {
    throw BackendError("oracle miss: no gold configured for instance '" +
                       instance_id + "'");
  }
  return it->second;
}

bool OracleBackend::is_corrupted(const std::string& instance_id,
                                 const std::string& permutation_id,
                                 std::optional<uint64_t> sample_seed) const {
  if (corruption_.count) {
    // Exactly `count` views per instance: corrupt the permutations whose
    // per-instance hash ranks lowest.
    std::vector<std::pair<uint64_t, std::string>> ranked;
    for (const auto& perm : all_permutations(task_)) {
      uint64_t h = fnv1a_u64(kFnvBasis, seed_);
      h = fnv1a_str(h, instance_id);
      h = fnv1a_str(h, perm.id());
      ranked.push_back({h, perm.id()});
    }
    std::sort(ranked.begin(), ranked.end());
    int limit = std::min<int>(*corruption_.count, static_cast<int>(ranked.size()));
    for (int i = 0; i < limit; ++i) {
      if (ranked[i].second == permutation_id) return true;
    }
    return false;
  }
  if (corruption_.probability <= 0.0) return false;
  uint64_t h = fnv1a_u64(kFnvBasis, seed_);
  h = fnv1a_str(h, instance_id);
  h = fnv1a_str(h, permutation_id);
  if (sample_seed) h = fnv1a_u64(h, *sample_seed);
  return to_unit_interval(h) < corruption_.probability;
}

std::vector<SentimentTuple> OracleBackend::corrupted_gold(
    const std::string& instance_id) const {
  std::vector<SentimentTuple> tuples = gold_for(instance_id);
  std::sort(tuples.begin(), tuples.end());
  if (corruption_.mode == OracleCorruption::Mode::DropTuple && tuples.size() > 1) {
    tuples.erase(tuples.begin());
    return tuples;
  }
  // Flip the polarity of the first tuple; deterministic per instance so
  // corrupted views agree with each other.
  SentimentTuple& t = tuples.front();
  switch (t.polarity) {
    case Polarity::Positive: t.polarity = Polarity::Negative; break;
    case Polarity::Negative: t.polarity = Polarity::Neutral; break;
    case Polarity::Neutral: t.polarity = Polarity::Positive; break;
  }
  return tuples;
}

GenerationRecord OracleBackend::decode(const DecodeRequest& request) {
  check_context_budget(request);
  if (request.instance_id.empty() || request.permutation_id.empty()) {
    throw BackendError("oracle requests must carry instance and permutation markers");
  }
  const std::vector<SentimentTuple>& gold = gold_for(request.instance_id);
  Permutation permutation = permutation_from_id(task_, request.permutation_id);

  std::optional<uint64_t> sample_seed;
  if (request.temperature > 0.0) sample_seed = request.seed;
  bool corrupted =
      is_corrupted(request.instance_id, request.permutation_id, sample_seed);
  std::vector<SentimentTuple> target_tuples =
      corrupted ? corrupted_gold(request.instance_id) : gold;
  std::string target = format_tuples(target_tuples, permutation);
  if (static_cast<int>(target.size()) > request.max_tokens) {
    throw BackendError("max_tokens " + std::to_string(request.max_tokens) +
                       " cannot hold the " + std::to_string(target.size()) +
                       "-token oracle target");
  }
  double level = corrupted ? corruption_.corrupted_entropy : corruption_.clean_entropy;

  std::optional<DecodeState> state;
  if (request.constraint) {
    state = DecodeState(request.constraint->automaton);
  }

  GenerationRecord record;
  record.tokens.reserve(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    int token = static_cast<unsigned char>(target[i]);
    if (state) {
      std::vector<int> mask = token_mask(*state, vocab_);
      if (!std::binary_search(mask.begin(), mask.end(), token)) {
        throw BackendError("oracle target byte " + std::to_string(token) +
                           " at offset " + std::to_string(i) +
                           " is masked out; gold violates the schema");
      }
      state = advance(*state, vocab_.bytes(token));
    }
    // Spread mass over eight fixed alternative bytes; reported pre-mask with
    // full coverage, as a full-vocabulary simulator can.
    std::vector<int> alternatives;
    if (level > 0.0) {
      alternatives.reserve(8);
      for (int d = 1; d <= 8; ++d) alternatives.push_back((token + d) % 256);
    }
    TokenDistribution dist = distribution_with_entropy(token, alternatives, level);
    record.per_token_entropy.push_back(entropy(dist));
    double confidence = 1.0;
    for (const auto& [id, p] : dist.probabilities) {
      if (id == token) confidence = p;
    }
    record.per_token_confidence.push_back(confidence);
    record.per_token.push_back(std::move(dist));
    record.tokens.push_back(token);
  }
  record.text = target;
  record.mean_entropy = mean_entropy(record);
  return record;
}

int OracleBackend::count_tokens(const std::string& text) const {
  // Four bytes per token, the usual rule-of-thumb granularity for prompt
  // accounting; generation tokens are bytes and are counted exactly.
  return static_cast<int>((text.size() + 3) / 4);
}

OracleBackend OracleBackend::from_json(const std::string& content) {
  nlohmann::json doc = nlohmann::json::parse(content);
  Task task(task_from_name(doc.at("task").get<std::string>()));
  OracleCorruption corruption;
  corruption.clean_entropy = doc.value("clean_entropy", 0.0);
  if (doc.contains("corruption")) {
    const auto& c = doc.at("corruption");
    corruption.probability = c.value("probability", 0.0);
    if (c.contains("count") && !c.at("count").is_null()) {
      corruption.count = c.at("count").get<int>();
    }
    corruption.corrupted_entropy = c.value("entropy", 0.9);
    std::string mode = c.value("mode", "flip_polarity");
    if (mode == "flip_polarity") {
      corruption.mode = OracleCorruption::Mode::FlipPolarity;
    } else if (mode == "drop_tuple") {
      corruption.mode = OracleCorruption::Mode::DropTuple;
    } else {
      throw ConfigError("unknown oracle corruption mode: " + mode);
    }
  }
  std::map<std::string, std::vector<SentimentTuple>> gold;
  for (const auto& [id, tuples] : doc.at("instances").items()) {
    std::vector<SentimentTuple> set;
    for (const auto& t : tuples) {
      set.push_back(tuple_from_json(t.dump(), task));
    }
    gold.emplace(id, std::move(set));
  }
  return OracleBackend(task, std::move(gold), corruption,
                       doc.value("seed", uint64_t{0}));
}

OracleBackend OracleBackend::from_json_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw ConfigError("cannot open oracle file: " + path);
  }
  std::ostringstream buf;
  buf << file.rdbuf();
  return from_json(buf.str());
}

}  // namespace mvabsa
