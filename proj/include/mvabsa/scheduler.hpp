#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mvabsa/backend.hpp"
#include "mvabsa/error.hpp"

namespace mvabsa {

// A decode request tagged with its prefix/suffix split and grouping key.
// Requests sharing a key must share byte-identical prefixes; the key is
// (dataset, shot sample, task, permutation) in serialized form.
struct ScheduledRequest {
  DecodeRequest request;
  std::string group_key;
  std::string prefix;
  std::string suffix;  // request.prompt == prefix + suffix
};

// All requests sharing one prompt prefix. Prefix cost is paid once per group.
struct PrefixGroup {
  std::string key;
  uint64_t prefix_hash = 0;
  std::string prefix;
  std::vector<std::size_t> request_indices;  // into the scheduled vector
};

// Exact prefill/generation token accounting.
//   uncached = sum over requests of (prefix + suffix tokens)
//   cached   = sum over groups of prefix tokens + sum over requests of suffix tokens
struct CostLedger {
  long long prefill_tokens_cached = 0;
  long long prefill_tokens_uncached = 0;
  long long generated_tokens = 0;
  long long requests = 0;

  double savings_ratio() const {
    if (prefill_tokens_uncached == 0) return 0.0;
    return 1.0 - static_cast<double>(prefill_tokens_cached) /
                     static_cast<double>(prefill_tokens_uncached);
  }

  CostLedger& operator+=(const CostLedger& other);
};

using TokenCounter = std::function<int(const std::string&)>;

// One group per distinct key, in first-appearance order; within-group request
// order preserved. Throws ConfigError when two requests under one key carry
// different prefix bytes.
std::vector<PrefixGroup> schedule(const std::vector<ScheduledRequest>& requests);

// Every request as its own group: the uncached comparison arrangement.
std::vector<PrefixGroup> schedule_ungrouped(const std::vector<ScheduledRequest>& requests);

// Prefill accounting for a grouping; generation counts are added from the
// records after dispatch.
CostLedger account(const std::vector<PrefixGroup>& groups,
                   const std::vector<ScheduledRequest>& requests,
                   const TokenCounter& count_tokens);

void add_generation_counts(CostLedger& ledger,
                           const std::vector<GenerationRecord>& records);

struct DispatchOptions {
  int max_parallel_groups = 4;  // groups in flight; each group runs serially
};

// Run every request against the backend, keeping each group's requests
// contiguous (and serial) so a cache-capable backend sees its prefix hot.
// Results come back in the original request order regardless of completion
// order; the first failure (by request index) is rethrown after all workers
// drain.
std::vector<GenerationRecord> dispatch(const std::vector<PrefixGroup>& groups,
                                       const std::vector<ScheduledRequest>& requests,
                                       Backend& backend,
                                       const DispatchOptions& options = {});

uint64_t prefix_digest(const std::string& prefix);

}  // namespace mvabsa
