#include "gaga/providers/prompt.hpp"

#include <mutex>
#include <utility>

#include "gaga/common/error.hpp"

namespace gaga::providers {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kPromptTexts[];
extern const std::size_t kPromptTextCount;
}  // namespace detail

namespace {

std::map<std::string, std::string, std::less<>> binding_for(std::string_view id) {
  if (id == "generic") return {{"Node's textual information", "text"}, {"possible categories", "categories"}};
  if (id == "arxiv") return {{"abstract", "abstract"}, {"title", "title"}};
  if (id == "arxiv2023" || id == "cora" || id == "pubmed") return {{"abstract text", "abstract"}, {"title text", "title"}};
  if (id == "link")
    return {{"title1", "title1"}, {"abstract1", "abstract1"}, {"title2", "title2"}, {"abstract2", "abstract2"}};
  if (id == "products") return {{"product description", "text"}};
  throw ValidationError("no field binding for template '" + std::string(id) + "'");
}

const std::vector<PromptTemplate>& registry() {
  static const std::vector<PromptTemplate> all = [] {
    std::vector<PromptTemplate> v;
    for (std::size_t i = 0; i < detail::kPromptTextCount; ++i) {
      const auto& [id, body] = detail::kPromptTexts[i];
      v.push_back({std::string(id), std::string(body), binding_for(id), id == "link"});
    }
    return v;
  }();
  return all;
}

}  // namespace

const PromptTemplate& builtin_template(std::string_view id) {
  for (const auto& t : registry())
    if (t.id == id) return t;
  std::string known;
  for (const auto& t : registry()) known += (known.empty() ? "" : ", ") + t.id;
  throw ValidationError("unknown prompt template '" + std::string(id) + "' (known: " + known + ")");
}

std::vector<std::string> builtin_template_ids() {
  std::vector<std::string> ids;
  for (const auto& t : registry()) ids.push_back(t.id);
  return ids;
}

std::string render_prompt(const PromptTemplate& t, const Fields& fields) {
  std::string out;
  out.reserve(t.body.size() + 256);
  std::size_t pos = 0;
  while (pos < t.body.size()) {
    const auto open = t.body.find('{', pos);
    if (open == std::string::npos) break;
    const auto close = t.body.find('}', open);
    if (close == std::string::npos) break;
    const std::string_view name(t.body.data() + open + 1, close - open - 1);
    auto b = t.binding.find(name);
    if (b == t.binding.end())
      throw ValidationError("template '" + t.id + "' has unbound placeholder {" + std::string(name) + "}");
    auto f = fields.find(b->second);
    if (f == fields.end())
      throw ValidationError("template '" + t.id + "' needs field '" + b->second + "' for {" + std::string(name) + "}");
    out.append(t.body, pos, open - pos);
    out += f->second;
    pos = close + 1;
  }
  out.append(t.body, pos);
  return out;
}

Fields node_fields(std::string_view text, std::string_view categories) {
  Fields f;
  const auto nl = text.find('\n');
  f["text"] = std::string(text);
  f["title"] = std::string(text.substr(0, nl));
  f["abstract"] = nl == std::string_view::npos ? std::string() : std::string(text.substr(nl + 1));
  f["categories"] = std::string(categories);
  return f;
}

Fields edge_fields(std::string_view text1, std::string_view text2) {
  const auto a = node_fields(text1), b = node_fields(text2);
  return {{"title1", a.at("title")}, {"abstract1", a.at("abstract")}, {"title2", b.at("title")},
          {"abstract2", b.at("abstract")}};
}

}  // namespace gaga::providers
