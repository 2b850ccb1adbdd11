#include "mvabsa/scheduler.hpp"

#include <atomic>
#include <map>
#include <thread>

namespace mvabsa {

uint64_t prefix_digest(const std::string& prefix) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : prefix) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

CostLedger& CostLedger::operator+=(const CostLedger& other) {
  prefill_tokens_cached += other.prefill_tokens_cached;
  prefill_tokens_uncached += other.prefill_tokens_uncached;
  generated_tokens += other.generated_tokens;
  requests += other.requests;
  return *this;
}

std::vector<PrefixGroup> schedule(const std::vector<ScheduledRequest>& requests) {
  std::vector<PrefixGroup> groups;
  std::map<std::string, std::size_t> by_key;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const ScheduledRequest& req = requests[i];
    if (req.request.prompt != req.prefix + req.suffix) {
      throw ConfigError("request " + std::to_string(i) +
                        ": prompt does not equal prefix + suffix");
    }
    auto it = by_key.find(req.group_key);
    if (it == by_key.end()) {
      PrefixGroup group;
      group.key = req.group_key;
      group.prefix = req.prefix;
      group.prefix_hash = prefix_digest(req.prefix);
      group.request_indices.push_back(i);
      by_key.emplace(req.group_key, groups.size());
      groups.push_back(std::move(group));
    } else {
      PrefixGroup& group = groups[it->second];
      if (group.prefix != req.prefix) {
        throw ConfigError("grouping integrity violation: key '" + req.group_key +
                          "' spans two different prefixes");
      }
      group.request_indices.push_back(i);
    }
  }
  return groups;
}

std::vector<PrefixGroup> schedule_ungrouped(
    const std::vector<ScheduledRequest>& requests) {
  std::vector<PrefixGroup> groups;
  groups.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    PrefixGroup group;
    group.key = requests[i].group_key + "#" + std::to_string(i);
    group.prefix = requests[i].prefix;
    group.prefix_hash = prefix_digest(group.prefix);
    group.request_indices.push_back(i);
    groups.push_back(std::move(group));
  }
  return groups;
}

CostLedger account(const std::vector<PrefixGroup>& groups,
                   const std::vector<ScheduledRequest>& requests,
                   const TokenCounter& count_tokens) {
  CostLedger ledger;
  for (const PrefixGroup& group : groups) {
    long long prefix_tokens = count_tokens(group.prefix);
    ledger.prefill_tokens_cached += prefix_tokens;
    for (std::size_t idx : group.request_indices) {
      long long suffix_tokens = count_tokens(requests[idx].suffix);
      ledger.prefill_tokens_cached += suffix_tokens;
      ledger.prefill_tokens_uncached += prefix_tokens + suffix_tokens;
      ledger.requests += 1;
    }
  }
  return ledger;
}

void add_generation_counts(CostLedger& ledger,
                           const std::vector<GenerationRecord>& records) {
  for (const GenerationRecord& record : records) {
    ledger.generated_tokens += static_cast<long long>(record.tokens.size());
  }
}

std::vector<GenerationRecord> dispatch(const std::vector<PrefixGroup>& groups,
                                       const std::vector<ScheduledRequest>& requests,
                                       Backend& backend,
                                       const DispatchOptions& options) {
  std::vector<GenerationRecord> records(requests.size());
  std::vector<std::exception_ptr> errors(requests.size());

  int workers = std::max(1, options.max_parallel_groups);
  workers = std::min<int>(workers, std::max<std::size_t>(groups.size(), 1));

  std::atomic<std::size_t> next_group{0};
  auto worker = [&]() {
    while (true) {
      std::size_t g = next_group.fetch_add(1);
      if (g >= groups.size()) break;
      for (std::size_t idx : groups[g].request_indices) {
        try {
          records[idx] = backend.decode(requests[idx].request);
        } catch (...) {
          errors[idx] = std::current_exception();
        }
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
  }
  return records;
}

}  // namespace mvabsa
