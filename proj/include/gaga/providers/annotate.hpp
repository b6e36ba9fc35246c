#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gaga/graph/tag.hpp"
#include "gaga/providers/annotator.hpp"
#include "gaga/providers/cache.hpp"
#include "gaga/providers/prompt.hpp"

namespace gaga::providers {

struct AnnotationRecord {
  AnnotationTarget target;
  std::string prompt_hash;  // SHA-256 hex of the rendered prompt
  std::string annotation_text;
  std::string provider_id;
  std::string created_at;  // UTC, ISO 8601

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct AnnotationFailure {
  AnnotationTarget target;
  std::string error;
  int http_status = 0;
};

struct CostLedger {
  std::size_t remote_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t prompt_tokens = 0;      // estimated, ceil(chars / 4)
  std::size_t completion_tokens = 0;  // estimated, ceil(chars / 4)
  double cost = 0;
};

struct AnnotateOptions {
  std::size_t parallelism = 4;
  double price_per_1k_prompt = 0;
  double price_per_1k_completion = 0;
};

struct AnnotateResult {
  std::vector<AnnotationRecord> records;  // selection order; failed targets omitted
  std::vector<AnnotationFailure> failures;
  CostLedger ledger;
};

std::size_t estimate_tokens(std::string_view text);

// Renders one prompt per selected item. Node targets use node_fields(text,
// categories); edge targets use edge_fields of both endpoints.
std::vector<AnnotationRequest> build_requests(const graph::Tag& tag, const select::SelectionResult& selection,
                                              const PromptTemplate& tmpl, std::string_view categories);

// Cache-first annotation keyed by prompt hash and provider id. Misses go to
// the annotator on up to `parallelism` threads. Throws ContractError on an
// empty request list.
AnnotateResult annotate(std::span<const AnnotationRequest> requests, Annotator& annotator, JsonlCache& cache,
                        const AnnotateOptions& options = {});

std::string serialize_records(std::span<const AnnotationRecord> records);
std::vector<AnnotationRecord> parse_records(std::string_view jsonl);
std::string serialize_failures(std::span<const AnnotationFailure> failures);

}  // namespace gaga::providers
