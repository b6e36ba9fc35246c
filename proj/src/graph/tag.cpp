#include "gaga/graph/tag.hpp"

#include <algorithm>
#include <charconv>
#include <json.hpp>

#include "gaga/common/error.hpp"
#include "gaga/common/io.hpp"

namespace gaga::graph {

namespace {

using json = nlohmann::json;

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t") == std::string_view::npos;
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

NodeId parse_id(std::string_view tok, std::size_t line) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError("edge endpoint '" + std::string(tok) + "' is not an integer", line);
  if (v < 0 || v > INT32_MAX) throw ParseError("edge endpoint " + std::string(tok) + " out of range", line);
  return static_cast<NodeId>(v);
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
    case Split::none: break;
  }
  return "none";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "valid" || s == "val") return Split::valid;
  if (s == "test") return Split::test;
  if (s == "none") return Split::none;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

bool Tag::has_labels() const {
  return std::any_of(labels.begin(), labels.end(), [](auto l) { return l != kNoLabel; });
}

std::vector<NodeId> Tag::nodes_in(Split s) const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(static_cast<NodeId>(i));
  return out;
}

void Tag::validate() const {
  const auto n = texts.size();
  if (graph.num_nodes() != n)
    throw ValidationError("graph has " + std::to_string(graph.num_nodes()) + " nodes but " + std::to_string(n) +
                          " texts");
  if (labels.size() != n || split.size() != n) throw ValidationError("labels/split length differs from node count");
  for (std::size_t i = 0; i < n; ++i) {
    const auto l = labels[i];
    if (l != kNoLabel && (l < 0 || l >= num_classes))
      throw ValidationError("node " + std::to_string(i) + " has label " + std::to_string(l) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    if ((l == kNoLabel) != (split[i] == Split::none))
      throw ValidationError("node " + std::to_string(i) +
                            (l == kNoLabel ? " is unlabeled but assigned to a split" : " is labeled but has no split"));
  }
}

Tag parse_tag(std::string_view node_jsonl, std::string_view edge_list, std::optional<std::int32_t> num_classes) {
  struct Row {
    std::string text;
    std::int32_t label = kNoLabel;
    Split split = Split::none;
    std::size_t line = 0;
  };
  std::vector<std::optional<Row>> rows;
  const auto node_lines = split_lines(node_jsonl);
  for (std::size_t ln = 0; ln < node_lines.size(); ++ln) {
    const auto line_no = ln + 1;
    if (blank(node_lines[ln])) continue;
    json j;
    try {
      j = json::parse(node_lines[ln]);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed node record: ") + e.what(), line_no);
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("text"))
      throw ParseError("node record needs 'id' and 'text'", line_no);
    if (!j["id"].is_number_integer() || j["id"].get<std::int64_t>() < 0)
      throw ParseError("node id must be a non-negative integer", line_no);
    if (!j["text"].is_string()) throw ParseError("node text must be a string", line_no);
    const auto id = static_cast<std::size_t>(j["id"].get<std::int64_t>());
    if (id > 100'000'000) throw ParseError("node id " + std::to_string(id) + " too large", line_no);
    Row r;
    r.text = j["text"].get<std::string>();
    r.line = line_no;
    if (j.contains("label") && !j["label"].is_null()) {
      if (!j["label"].is_number_integer()) throw ParseError("label must be an integer", line_no);
      const auto l = j["label"].get<std::int64_t>();
      if (l < 0) throw ParseError("label must be non-negative", line_no);
      if (num_classes && l >= *num_classes)
        throw ValidationError("node " + std::to_string(id) + " has label " + std::to_string(l) + " but C = " +
                              std::to_string(*num_classes) + " (line " + std::to_string(line_no) + ")");
      r.label = static_cast<std::int32_t>(l);
    }
    if (j.contains("split") && !j["split"].is_null()) {
      if (!j["split"].is_string()) throw ParseError("split must be a string", line_no);
      try {
        r.split = parse_split(j["split"].get<std::string>());
      } catch (const ValidationError& e) {
        throw ParseError(e.what(), line_no);
      }
    }
    if (rows.size() <= id) rows.resize(id + 1);
    if (rows[id]) throw ParseError("duplicate node id " + std::to_string(id), line_no);
    rows[id] = std::move(r);
  }

  Tag tag;
  const auto n = rows.size();
  tag.texts.resize(n);
  tag.labels.assign(n, kNoLabel);
  tag.split.assign(n, Split::none);
  std::int32_t max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (!rows[i]) throw ValidationError("node ids must be contiguous from 0; id " + std::to_string(i) + " is missing");
    tag.texts[i] = std::move(rows[i]->text);
    tag.labels[i] = rows[i]->label;
    tag.split[i] = rows[i]->split;
    max_label = std::max(max_label, rows[i]->label);
  }
  tag.num_classes = num_classes ? *num_classes : max_label + 1;

  std::vector<Edge> edges;
  const auto edge_lines = split_lines(edge_list);
  for (std::size_t ln = 0; ln < edge_lines.size(); ++ln) {
    const auto line_no = ln + 1;
    const auto line = edge_lines[ln];
    if (blank(line) || line.find_first_not_of(" \t") == line.find('#')) continue;
    const auto tok = tokens(line);
    if (tok.size() != 2) throw ParseError("edge line needs exactly two node ids", line_no);
    const auto u = parse_id(tok[0], line_no), v = parse_id(tok[1], line_no);
    for (auto e : {u, v})
      if (static_cast<std::size_t>(e) >= n)
        throw ValidationError("dangling edge endpoint " + std::to_string(e) + " (N = " + std::to_string(n) +
                              ", line " + std::to_string(line_no) + ")");
    edges.push_back({u, v});
  }
  tag.graph = CsrGraph(n, edges);
  tag.validate();
  return tag;
}

Tag load_tag(const std::filesystem::path& node_file, const std::filesystem::path& edge_file,
             std::optional<std::int32_t> num_classes) {
  const auto nodes = io::read_file(node_file);
  const auto edges = io::read_file(edge_file);
  try {
    return parse_tag(nodes, edges, num_classes);
  } catch (const ParseError& e) {
    throw ParseError(node_file.filename().string() + "/" + edge_file.filename().string() + ": " + e.what());
  }
}

std::string serialize_nodes(const Tag& tag) {
  std::string out;
  for (std::size_t i = 0; i < tag.num_nodes(); ++i) {
    json j;
    j["id"] = i;
    j["text"] = tag.texts[i];
    if (tag.labels[i] != kNoLabel) j["label"] = tag.labels[i];
    if (tag.split[i] != Split::none) j["split"] = std::string(split_name(tag.split[i]));
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string serialize_edges(const std::vector<Edge>& edges) {
  std::string out;
  for (const auto& e : edges) {
    out += std::to_string(e.u);
    out += ' ';
    out += std::to_string(e.v);
    out += '\n';
  }
  return out;
}

void save_tag(const Tag& tag, const std::filesystem::path& node_file, const std::filesystem::path& edge_file) {
  io::write_file(node_file, serialize_nodes(tag));
  io::write_file(edge_file, serialize_edges(tag.graph.edges()));
}

Tag with_edges(const Tag& tag, std::span<const Edge> edges) {
  Tag out = tag;
  out.graph = CsrGraph(tag.num_nodes(), edges);
  return out;
}

}  // namespace gaga::graph
