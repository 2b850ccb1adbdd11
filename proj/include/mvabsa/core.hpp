#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvabsa/error.hpp"

namespace mvabsa {

// The four sentiment elements a tuple can carry.
enum class ElementKind : uint8_t {
  AspectTerm = 0,
  AspectCategory = 1,
  OpinionTerm = 2,
  Polarity = 3,
};

// Stable two-letter codes: "at", "ac", "ot", "p".
const char* element_code(ElementKind kind);
ElementKind element_from_code(const std::string& code);

enum class TaskKind : uint8_t {
  TASD,  // (aspect term, aspect category, polarity)
  ASQP,  // (aspect term, aspect category, opinion term, polarity)
};

const char* task_name(TaskKind kind);
TaskKind task_from_name(const std::string& name);

// A task fixes the element set and its natural presentation order.
class Task {
 public:
  explicit Task(TaskKind kind);

  TaskKind kind() const { return kind_; }
  int arity() const { return static_cast<int>(elements_.size()); }
  const std::vector<ElementKind>& elements() const { return elements_; }
  bool has_opinion_term() const { return kind_ == TaskKind::ASQP; }

  bool operator==(const Task& other) const { return kind_ == other.kind_; }

 private:
  TaskKind kind_;
  std::vector<ElementKind> elements_;
};

enum class Polarity : uint8_t {
  Positive,
  Negative,
  Neutral,
};

const char* polarity_name(Polarity p);
Polarity polarity_from_name(const std::string& name);

// The surface forms every grammar schema admits for the polarity slot.
const std::vector<std::string>& polarity_names();

// Distinguished literal marking an implicit aspect term.
inline constexpr const char* kNullAspectMarker = "NULL";

// One extracted sentiment record. Equality is field-wise, case-sensitive,
// exact; the unit of exact-match evaluation.
struct SentimentTuple {
  std::string aspect_term;  // may be the literal "NULL"
  std::string aspect_category;
  std::optional<std::string> opinion_term;  // present iff the task is ASQP
  Polarity polarity = Polarity::Positive;

  bool has_null_aspect() const { return aspect_term == kNullAspectMarker; }

  bool operator==(const SentimentTuple& other) const = default;
  // Canonical (at, ac, ot, p) lexicographic order.
  bool operator<(const SentimentTuple& other) const;

  // Canonical single-line rendering, e.g. "(wine list, drinks#style, excellent, positive)".
  std::string to_string() const;
};

struct SentimentTupleHash {
  std::size_t operator()(const SentimentTuple& t) const;
};

// An ordering of a task's sentiment elements; identifies one view.
class Permutation {
 public:
  Permutation(Task task, std::vector<ElementKind> order);

  const Task& task() const { return task_; }
  const std::vector<ElementKind>& order() const { return order_; }
  // Canonical id: two-letter element codes joined by hyphens, e.g. "at-ot-ac-p".
  const std::string& id() const { return id_; }

  // Position of `kind` within this ordering.
  int index_of(ElementKind kind) const;

  bool operator==(const Permutation& other) const {
    return task_ == other.task_ && order_ == other.order_;
  }

 private:
  Task task_;
  std::vector<ElementKind> order_;
  std::string id_;
};

// All arity! orderings in a deterministic canonical order (lexicographic over
// element ids). 6 for TASD, 24 for ASQP.
std::vector<Permutation> all_permutations(const Task& task);

// The task's natural element order: (at, ac, p) or (at, ac, ot, p).
Permutation identity_permutation(const Task& task);

Permutation permutation_from_id(const Task& task, const std::string& id);

// One dataset sentence, optionally gold-annotated.
struct Instance {
  std::string id;
  std::string text;
  std::optional<std::vector<SentimentTuple>> gold;
};

// Dataset-specific aspect category inventory. Membership is case-sensitive.
class CategorySet {
 public:
  explicit CategorySet(std::vector<std::string> categories);

  const std::vector<std::string>& categories() const { return categories_; }
  bool contains(const std::string& category) const;
  std::size_t size() const { return categories_.size(); }

 private:
  std::vector<std::string> categories_;
};

// Demonstration pool plus the seed that orders it.
struct ShotConfig {
  uint64_t seed = 0;
  std::vector<Instance> pool;
};

// First k instances of a seeded pseudo-random permutation of the pool.
// Prefix-nested: sample(k1) is a prefix of sample(k2) whenever k1 <= k2.
std::vector<Instance> sample_shots(const ShotConfig& config, std::size_t k);

// Dataset ingestion (JSON Lines, one instance per line):
//   {"id": "...", "text": "...", "tuples": [{"at": "...", "ac": "...", "ot": "...", "p": "positive"}]}
// "ot" is omitted for TASD; "at" may be "NULL"; "tuples" may be absent for
// unlabelled instances.
std::vector<Instance> load_instances(const std::string& path, const Task& task);
std::vector<Instance> parse_instances_jsonl(const std::string& content, const Task& task);

// Category inventory as a JSON array file.
CategorySet load_categories(const std::string& path);

// Serialization helpers shared by dataset io and prediction persistence.
std::string tuple_to_json(const SentimentTuple& tuple, const Task& task);
SentimentTuple tuple_from_json(const std::string& json, const Task& task);

}  // namespace mvabsa
