#include "gaga/providers/annotate.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <thread>

#include "gaga/common/error.hpp"
#include "gaga/common/hash.hpp"

namespace gaga::providers {

using json = nlohmann::json;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json target_json(const AnnotationTarget& t) {
  return t.kind == select::ItemKind::node ? json::array({t.u}) : json::array({t.u, t.v});
}

json record_json(const AnnotationRecord& r) {
  return json{{"kind", r.target.kind == select::ItemKind::node ? "node" : "edge"},
              {"target", target_json(r.target)},
              {"prompt_hash", r.prompt_hash},
              {"annotation_text", r.annotation_text},
              {"provider_id", r.provider_id},
              {"created_at", r.created_at}};
}

AnnotationRecord record_from(const json& j) {
  AnnotationRecord r;
  r.target.kind = j.at("kind").get<std::string>() == "edge" ? select::ItemKind::edge : select::ItemKind::node;
  const auto& t = j.at("target");
  r.target.u = t.at(0).get<graph::NodeId>();
  if (r.target.kind == select::ItemKind::edge) r.target.v = t.at(1).get<graph::NodeId>();
  r.prompt_hash = j.at("prompt_hash").get<std::string>();
  r.annotation_text = j.at("annotation_text").get<std::string>();
  r.provider_id = j.at("provider_id").get<std::string>();
  r.created_at = j.at("created_at").get<std::string>();
  if (r.annotation_text.empty()) throw ValidationError("annotation record with empty text");
  return r;
}

}  // namespace

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::vector<AnnotationRequest> build_requests(const graph::Tag& tag, const select::SelectionResult& selection,
                                              const PromptTemplate& tmpl, std::string_view categories) {
  std::vector<AnnotationRequest> out;
  auto label_of = [&](graph::NodeId v) { return tag.labels.empty() ? graph::kNoLabel : tag.labels[v]; };
  if (selection.kind == select::ItemKind::node) {
    if (tmpl.edge) throw ValidationError("template '" + tmpl.id + "' is for edges but the selection holds nodes");
    for (auto v : selection.nodes) {
      AnnotationRequest r;
      r.target = {select::ItemKind::node, v, 0};
      r.prompt = render_prompt(tmpl, node_fields(tag.texts.at(v), categories));
      r.texts = {tag.texts[v]};
      r.labels = {label_of(v)};
      out.push_back(std::move(r));
    }
  } else {
    if (!tmpl.edge) throw ValidationError("template '" + tmpl.id + "' is for nodes but the selection holds edges");
    for (const auto& e : selection.edges) {
      AnnotationRequest r;
      r.target = {select::ItemKind::edge, e.u, e.v};
      r.prompt = render_prompt(tmpl, edge_fields(tag.texts.at(e.u), tag.texts.at(e.v)));
      r.texts = {tag.texts[e.u], tag.texts[e.v]};
      r.labels = {label_of(e.u), label_of(e.v)};
      out.push_back(std::move(r));
    }
  }
  return out;
}

AnnotateResult annotate(std::span<const AnnotationRequest> requests, Annotator& annotator, JsonlCache& cache,
                        const AnnotateOptions& options) {
  if (requests.empty()) throw ContractError("annotate needs a non-empty selection");
  const auto provider = annotator.id();
  std::vector<std::optional<AnnotationRecord>> done(requests.size());
  std::vector<std::optional<AnnotationFailure>> failed(requests.size());
  CostLedger ledger;
  std::mutex ledger_mu;
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= requests.size()) return;
      const auto& req = requests[i];
      const auto hash = sha256_hex(req.prompt);
      const auto key = hash + "|" + provider;
      if (auto hit = cache.get(key)) {
        try {
          auto rec = record_from(*hit);
          if (rec.target == req.target) {
            done[i] = std::move(rec);
            std::lock_guard lock(ledger_mu);
            ++ledger.cache_hits;
            continue;
          }
        } catch (const std::exception&) {
          // Unusable cache entry: fall through and ask the provider again.
        }
      }
      std::string text;
      try {
        text = annotator.complete(req);
        if (text.empty()) throw ProviderError("empty completion for " + target_str(req.target));
      } catch (const ProviderError& e) {
        failed[i] = AnnotationFailure{req.target, e.what(), e.http_status()};
        std::lock_guard lock(ledger_mu);
        ++ledger.remote_calls;
        ledger.prompt_tokens += estimate_tokens(req.prompt);
        continue;
      }
      AnnotationRecord rec{req.target, hash, text, provider, utc_now()};
      cache.put(key, record_json(rec));
      {
        std::lock_guard lock(ledger_mu);
        ++ledger.remote_calls;
        ledger.prompt_tokens += estimate_tokens(req.prompt);
        ledger.completion_tokens += estimate_tokens(text);
      }
      done[i] = std::move(rec);
    }
  };

  const auto threads = std::max<std::size_t>(1, std::min(options.parallelism, requests.size()));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  AnnotateResult out;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (done[i]) out.records.push_back(std::move(*done[i]));
    if (failed[i]) out.failures.push_back(std::move(*failed[i]));
  }
  ledger.cost = static_cast<double>(ledger.prompt_tokens) / 1000.0 * options.price_per_1k_prompt +
                static_cast<double>(ledger.completion_tokens) / 1000.0 * options.price_per_1k_completion;
  out.ledger = ledger;
  return out;
}

std::string serialize_records(std::span<const AnnotationRecord> records) {
  std::string out;
  for (const auto& r : records) out += record_json(r).dump() + "\n";
  return out;
}

std::vector<AnnotationRecord> parse_records(std::string_view jsonl) {
  std::vector<AnnotationRecord> out;
  std::size_t start = 0, line_no = 0;
  while (start < jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const auto line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(record_from(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed annotation record: ") + e.what(), line_no);
    }
  }
  return out;
}

std::string serialize_failures(std::span<const AnnotationFailure> failures) {
  json a = json::array();
  for (const auto& f : failures)
    a.push_back({{"kind", f.target.kind == select::ItemKind::node ? "node" : "edge"},
                 {"target", target_json(f.target)},
                 {"error", f.error},
                 {"http_status", f.http_status}});
  return json{{"failures", a}}.dump(2) + "\n";
}

}  // namespace gaga::providers
