#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gaga::providers {

// Canonical target fields: title, abstract, text, categories, and
// title1/abstract1/title2/abstract2 for edge prompts.
using Fields = std::map<std::string, std::string, std::less<>>;

// A prompt body with `{placeholder}` slots. `binding` maps each placeholder
// as written in the body (without braces) to a canonical field name, so the
// bodies keep their original wording.
struct PromptTemplate {
  std::string id;
  std::string body;
  std::map<std::string, std::string, std::less<>> binding;
  bool edge = false;  // renders from a pair of targets
};

// Built-in bodies live in prompts/<id>.txt: generic, arxiv, arxiv2023, cora,
// pubmed, link, products.
const PromptTemplate& builtin_template(std::string_view id);
std::vector<std::string> builtin_template_ids();

// Replaces each `{placeholder}` with its bound field value in a single pass;
// values are inserted verbatim and never rescanned. Throws ValidationError
// when a placeholder has no binding or the field is absent. An empty value
// is legal.
std::string render_prompt(const PromptTemplate& t, const Fields& fields);

// Splits node text into title (first line) and abstract (the rest), and
// also exposes the whole string as `text`.
Fields node_fields(std::string_view text, std::string_view categories = {});
Fields edge_fields(std::string_view text1, std::string_view text2);

}  // namespace gaga::providers
