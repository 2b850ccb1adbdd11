#include "mvabsa/core.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace mvabsa {

namespace {

const std::vector<ElementKind> kTasdElements = {
    ElementKind::AspectTerm, ElementKind::AspectCategory, ElementKind::Polarity};
const std::vector<ElementKind> kAsqpElements = {
    ElementKind::AspectTerm, ElementKind::AspectCategory, ElementKind::OpinionTerm,
    ElementKind::Polarity};

}  // namespace

const char* element_code(ElementKind kind) {
  switch (kind) {
    case ElementKind::AspectTerm: return "at";
    case ElementKind::AspectCategory: return "ac";
    case ElementKind::OpinionTerm: return "ot";
    case ElementKind::Polarity: return "p";
  }
  throw InputError("unknown element kind");
}

ElementKind element_from_code(const std::string& code) {
  if (code == "at") return ElementKind::AspectTerm;
  if (code == "ac") return ElementKind::AspectCategory;
  if (code == "ot") return ElementKind::OpinionTerm;
  if (code == "p") return ElementKind::Polarity;
  throw InputError("unknown element code: " + code);
}

const char* task_name(TaskKind kind) {
  return kind == TaskKind::TASD ? "tasd" : "asqp";
}

TaskKind task_from_name(const std::string& name) {
  if (name == "tasd") return TaskKind::TASD;
  if (name == "asqp") return TaskKind::ASQP;
  throw ConfigError("unknown task: " + name);
}

Task::Task(TaskKind kind)
    : kind_(kind), elements_(kind == TaskKind::TASD ? kTasdElements : kAsqpElements) {}

const char* polarity_name(Polarity p) {
  switch (p) {
    case Polarity::Positive: return "positive";
    case Polarity::Negative: return "negative";
    case Polarity::Neutral: return "neutral";
  }
  throw InputError("unknown polarity");
}

Polarity polarity_from_name(const std::string& name) {
  if (name == "positive") return Polarity::Positive;
  if (name == "negative") return Polarity::Negative;
  if (name == "neutral") return Polarity::Neutral;
  throw InputError("unknown polarity: " + name);
}

const std::vector<std::string>& polarity_names() {
  static const std::vector<std::string> names = {"positive", "negative", "neutral"};
  return names;
}

bool SentimentTuple::operator<(const SentimentTuple& other) const {
  auto key = [](const SentimentTuple& t) {
    return std::tie(t.aspect_term, t.aspect_category, t.opinion_term, t.polarity);
  };
  return key(*this) < key(other);
}

std::string SentimentTuple::to_string() const {
  std::string out = "(" + aspect_term + ", " + aspect_category;
  if (opinion_term) out += ", " + *opinion_term;
  out += ", ";
  out += polarity_name(polarity);
  out += ")";
  return out;
}

std::size_t SentimentTupleHash::operator()(const SentimentTuple& t) const {
  // FNV-1a over the canonical rendering; stable across platforms.
  std::string s = t.to_string();
  std::size_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Permutation::Permutation(Task task, std::vector<ElementKind> order)
    : task_(task), order_(std::move(order)) {
  if (order_.size() != task_.elements().size()) {
    throw InputError("permutation arity does not match task");
  }
  auto sorted = order_;
  std::sort(sorted.begin(), sorted.end());
  auto expected = task_.elements();
  std::sort(expected.begin(), expected.end());
  if (sorted != expected) {
    throw InputError("permutation is not a bijection on the task's elements");
  }
  for (std::size_t i = 0; i < order_.size(); ++i) {
    if (i > 0) id_ += '-';
    id_ += element_code(order_[i]);
  }
}

int Permutation::index_of(ElementKind kind) const {
  for (std::size_t i = 0; i < order_.size(); ++i) {
    if (order_[i] == kind) return static_cast<int>(i);
  }
  throw InputError("element not in permutation");
}

std::vector<Permutation> all_permutations(const Task& task) {
  std::vector<ElementKind> elems = task.elements();
  // Canonical order is lexicographic over the two-letter element codes.
  std::sort(elems.begin(), elems.end(), [](ElementKind a, ElementKind b) {
    return std::string(element_code(a)) < element_code(b);
  });
  std::vector<Permutation> result;
  do {
    result.emplace_back(task, elems);
  } while (std::next_permutation(
      elems.begin(), elems.end(), [](ElementKind a, ElementKind b) {
        return std::string(element_code(a)) < element_code(b);
      }));
  return result;
}

Permutation identity_permutation(const Task& task) {
  return Permutation(task, task.elements());
}

Permutation permutation_from_id(const Task& task, const std::string& id) {
  std::vector<ElementKind> order;
  std::string code;
  std::istringstream stream(id);
  while (std::getline(stream, code, '-')) {
    order.push_back(element_from_code(code));
  }
  return Permutation(task, std::move(order));
}

CategorySet::CategorySet(std::vector<std::string> categories)
    : categories_(std::move(categories)) {
  if (categories_.empty()) {
    throw ConfigError("category set must be non-empty");
  }
  std::unordered_set<std::string> seen;
  for (const auto& c : categories_) {
    if (c.empty()) {
      throw ConfigError("category set contains an empty string");
    }
    if (!seen.insert(c).second) {
      throw ConfigError("duplicate category: " + c);
    }
  }
}

bool CategorySet::contains(const std::string& category) const {
  return std::find(categories_.begin(), categories_.end(), category) !=
         categories_.end();
}

std::vector<Instance> sample_shots(const ShotConfig& config, std::size_t k) {
  if (k > config.pool.size()) {
    throw ConfigError("requested " + std::to_string(k) + " shots from a pool of " +
                      std::to_string(config.pool.size()));
  }
  // Fisher-Yates with explicit index draws so the ordering is identical on
  // every platform (std::shuffle and the distribution classes are not).
  std::vector<std::size_t> order(config.pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<Instance> sample;
  sample.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    sample.push_back(config.pool[order[i]]);
  }
  return sample;
}

namespace {

SentimentTuple tuple_from_json_obj(const nlohmann::json& obj, const Task& task) {
  SentimentTuple t;
  t.aspect_term = obj.at("at").get<std::string>();
  t.aspect_category = obj.at("ac").get<std::string>();
  if (task.has_opinion_term()) {
    t.opinion_term = obj.at("ot").get<std::string>();
  } else if (obj.contains("ot")) {
    throw ConfigError("tuple carries an opinion term but the task is TASD");
  }
  t.polarity = polarity_from_name(obj.at("p").get<std::string>());
  return t;
}

nlohmann::json tuple_to_json_obj(const SentimentTuple& tuple, const Task& task) {
  nlohmann::json obj;
  obj["at"] = tuple.aspect_term;
  obj["ac"] = tuple.aspect_category;
  if (task.has_opinion_term()) {
    if (!tuple.opinion_term) {
      throw ConfigError("ASQP tuple is missing its opinion term");
    }
    obj["ot"] = *tuple.opinion_term;
  }
  obj["p"] = polarity_name(tuple.polarity);
  return obj;
}

}  // namespace

std::string tuple_to_json(const SentimentTuple& tuple, const Task& task) {
  return tuple_to_json_obj(tuple, task).dump();
}

SentimentTuple tuple_from_json(const std::string& json, const Task& task) {
  return tuple_from_json_obj(nlohmann::json::parse(json), task);
}

std::vector<Instance> parse_instances_jsonl(const std::string& content,
                                            const Task& task) {
  std::vector<Instance> instances;
  std::istringstream stream(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
    Instance inst;
    inst.id = obj.at("id").get<std::string>();
    inst.text = obj.at("text").get<std::string>();
    if (inst.text.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": empty text");
    }
    if (obj.contains("tuples")) {
      std::vector<SentimentTuple> gold;
      for (const auto& t : obj.at("tuples")) {
        gold.push_back(tuple_from_json_obj(t, task));
      }
      inst.gold = std::move(gold);
    }
    instances.push_back(std::move(inst));
  }
  return instances;
}

std::vector<Instance> load_instances(const std::string& path, const Task& task) {
  std::ifstream file(path);
  if (!file) {
    throw ConfigError("cannot open dataset file: " + path);
  }
  std::ostringstream buf;
  buf << file.rdbuf();
  return parse_instances_jsonl(buf.str(), task);
}

CategorySet load_categories(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw ConfigError("cannot open category file: " + path);
  }
  nlohmann::json arr = nlohmann::json::parse(file, nullptr, true);
  if (!arr.is_array()) {
    throw ConfigError("category file must hold a JSON array: " + path);
  }
  std::vector<std::string> categories;
  for (const auto& c : arr) {
    categories.push_back(c.get<std::string>());
  }
  return CategorySet(std::move(categories));
}

}  // namespace mvabsa
