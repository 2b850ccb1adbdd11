#pragma once

#include <map>
#include <string>
#include <vector>

#include "mvabsa/core.hpp"
#include "mvabsa/error.hpp"

namespace mvabsa {

// The four prompt components: element definitions, an output-format line
// parameterized by the permutation, demonstrations, and the input block.
// The prose is template-driven; the block structure (blank-line separated
// demonstrations, `Text: ...` / `Sentiment elements:` framing) is fixed
// because the prefix scheduler depends on it.
struct PromptTemplate {
  std::string preamble;
  std::map<ElementKind, std::string> element_descriptions;
  std::string format_spec;  // carries the "{order}" placeholder
  std::string demo_text_prefix = "Text: ";
  std::string demo_label_prefix = "Sentiment elements: ";
  std::string input_marker = "Sentiment elements:";

  // The default wording, shipped both compiled-in and as editable files under
  // templates/ (identical text; a test keeps them aligned).
  static PromptTemplate builtin(const Task& task);

  // Load from a directory holding preamble.txt, format.txt, and
  // description_<code>.txt per element.
  static PromptTemplate load(const std::string& dir, const Task& task);
};

// A rendered prompt split at the instance text: `prefix` is byte-identical
// across all instances sharing (permutation, shots, task, dataset);
// `suffix` is the instance sentence plus the trailing marker.
struct RenderedPrompt {
  std::string prefix;
  std::string suffix;
  std::string permutation_id;
  int shot_k = 0;

  std::string full() const { return prefix + suffix; }
};

// Human-readable element name used inside prompt prose ("aspect term", ...).
const char* element_prose_name(ElementKind kind);

// Assemble the prompt for one (permutation, shots, instance). Demonstration
// labels are formatted under the permutation via the grammar surface form.
// Throws InputError when a shot is missing gold labels.
RenderedPrompt render(const PromptTemplate& tmpl, const Permutation& permutation,
                      const std::vector<Instance>& shots, const Instance& instance);

}  // namespace mvabsa
