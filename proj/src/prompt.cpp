#include "mvabsa/prompt.hpp"

#include <fstream>
#include <sstream>

#include "mvabsa/grammar.hpp"

namespace mvabsa {

namespace {

const char* kPreamble =
    "You are given a review sentence. Extract every sentiment tuple it "
    "expresses, using these element definitions:";

const char* kDescAt =
    "- The aspect term is the exact phrase of the sentence naming the entity "
    "an opinion is about. Use NULL when the entity is only implied.";
const char* kDescAc =
    "- The aspect category is the predefined class of the aspect, taken from "
    "the dataset's category inventory.";
const char* kDescOt =
    "- The opinion term is the exact phrase of the sentence carrying the "
    "sentiment about the aspect.";
const char* kDescP =
    "- The sentiment polarity is one of positive, negative or neutral.";

const char* kFormatSpec =
    "Return all tuples as a comma-separated list in square brackets, each "
    "tuple in parentheses with its elements ordered as ({order}).";

std::string read_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw ConfigError("cannot open template file: " + path);
  }
  std::ostringstream buf;
  buf << file.rdbuf();
  std::string text = buf.str();
  // Template files end with a newline; the placeholder text does not.
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
    text.pop_back();
  }
  return text;
}

}  // namespace

const char* element_prose_name(ElementKind kind) {
  switch (kind) {
    case ElementKind::AspectTerm: return "aspect term";
    case ElementKind::AspectCategory: return "aspect category";
    case ElementKind::OpinionTerm: return "opinion term";
    case ElementKind::Polarity: return "sentiment polarity";
  }
  throw InputError("unknown element kind");
}

PromptTemplate PromptTemplate::builtin(const Task& task) {
  PromptTemplate tmpl;
  tmpl.preamble = kPreamble;
  tmpl.element_descriptions[ElementKind::AspectTerm] = kDescAt;
  tmpl.element_descriptions[ElementKind::AspectCategory] = kDescAc;
  if (task.has_opinion_term()) {
    tmpl.element_descriptions[ElementKind::OpinionTerm] = kDescOt;
  }
  tmpl.element_descriptions[ElementKind::Polarity] = kDescP;
  tmpl.format_spec = kFormatSpec;
  return tmpl;
}

PromptTemplate PromptTemplate::load(const std::string& dir, const Task& task) {
  PromptTemplate tmpl;
  tmpl.preamble = read_file(dir + "/preamble.txt");
  tmpl.format_spec = read_file(dir + "/format.txt");
  for (ElementKind kind : task.elements()) {
    tmpl.element_descriptions[kind] =
        read_file(dir + "/description_" + element_code(kind) + ".txt");
  }
  return tmpl;
}

RenderedPrompt render(const PromptTemplate& tmpl, const Permutation& permutation,
                      const std::vector<Instance>& shots,
                      const Instance& instance) {
  const Task& task = permutation.task();

  std::string order;
  for (std::size_t i = 0; i < permutation.order().size(); ++i) {
    if (i > 0) order += ", ";
    order += element_prose_name(permutation.order()[i]);
  }
  std::string format_spec = tmpl.format_spec;
  if (auto pos = format_spec.find("{order}"); pos != std::string::npos) {
    format_spec.replace(pos, 7, order);
  }

  std::string prefix = tmpl.preamble;
  prefix += "\n\n";
  // Definitions stay in the task's natural element order; only the format
  // line and the labels follow the permutation.
  for (ElementKind kind : task.elements()) {
    auto it = tmpl.element_descriptions.find(kind);
    if (it == tmpl.element_descriptions.end()) {
      throw ConfigError(std::string("template lacks a description for ") +
                        element_prose_name(kind));
    }
    prefix += it->second;
    prefix += '\n';
  }
  prefix += '\n';
  prefix += format_spec;
  prefix += '\n';

  for (const Instance& shot : shots) {
    if (!shot.gold || shot.gold->empty()) {
      throw InputError("demonstration instance '" + shot.id +
                       "' carries no gold labels");
    }
    prefix += '\n';
    prefix += tmpl.demo_text_prefix + shot.text + '\n';
    prefix += tmpl.demo_label_prefix + format_tuples(*shot.gold, permutation);
    prefix += '\n';
  }

  prefix += '\n';
  prefix += tmpl.demo_text_prefix;  // the split sits right before the instance text

  RenderedPrompt rendered;
  rendered.prefix = std::move(prefix);
  rendered.suffix = instance.text + '\n' + tmpl.input_marker;
  rendered.permutation_id = permutation.id();
  rendered.shot_k = static_cast<int>(shots.size());
  return rendered;
}

}  // namespace mvabsa
