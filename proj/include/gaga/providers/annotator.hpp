#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gaga/graph/synth.hpp"
#include "gaga/providers/http.hpp"
#include "gaga/select/selection.hpp"

namespace gaga::providers {

struct AnnotationTarget {
  select::ItemKind kind = select::ItemKind::node;
  graph::NodeId u = 0, v = 0;  // v is unused for nodes
  friend bool operator==(const AnnotationTarget&, const AnnotationTarget&) = default;
};

std::string target_str(const AnnotationTarget& t);

struct AnnotationRequest {
  AnnotationTarget target;
  std::string prompt;
  // Endpoint texts and labels (one entry for a node, two for an edge). Only
  // the mock reads these.
  std::vector<std::string> texts;
  std::vector<std::int32_t> labels;
};

class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual std::string id() const = 0;
  // Returns the completion text or throws ProviderError.
  virtual std::string complete(const AnnotationRequest& req) = 0;
};

// Offline stand-in for an LLM. The answer depends only on (texts, labels,
// seed): it lists keywords from the true class bag, a few distractors from
// other bags, and words quoted from the target text.
class MockAnnotator final : public Annotator {
 public:
  struct Options {
    std::size_t keywords = 6;
    std::size_t distractors = 2;
    std::size_t quoted = 3;
  };
  MockAnnotator(graph::Lexicon lexicon, std::uint64_t seed);
  MockAnnotator(graph::Lexicon lexicon, std::uint64_t seed, Options options);
  std::string id() const override { return "mock:s" + std::to_string(seed_); }
  std::string complete(const AnnotationRequest& req) override;

 private:
  graph::Lexicon lexicon_;
  std::uint64_t seed_;
  Options options_;
};

// OpenAI-style chat completions: POST {"model", "temperature", "messages":
// [{"role": "user", "content": prompt}]} and read
// choices[0].message.content. An empty completion is an error.
class HttpChatAnnotator final : public Annotator {
 public:
  HttpChatAnnotator(std::string endpoint, std::string model, double temperature, std::string api_key,
                    RetryPolicy retry = {});
  std::string id() const override;
  std::string complete(const AnnotationRequest& req) override;

 private:
  std::string endpoint_, model_, api_key_;
  double temperature_;
  RetryPolicy retry_;
};

}  // namespace gaga::providers
