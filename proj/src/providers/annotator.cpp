#include "gaga/providers/annotator.hpp"

#include <algorithm>
#include <json.hpp>
#include <set>
#include <sstream>

#include "gaga/common/error.hpp"
#include "gaga/common/hash.hpp"
#include "gaga/common/rng.hpp"

namespace gaga::providers {

using json = nlohmann::json;

std::string target_str(const AnnotationTarget& t) {
  if (t.kind == select::ItemKind::node) return "node " + std::to_string(t.u);
  return "edge (" + std::to_string(t.u) + ", " + std::to_string(t.v) + ")";
}

MockAnnotator::MockAnnotator(graph::Lexicon lexicon, std::uint64_t seed)
    : MockAnnotator(std::move(lexicon), seed, Options{}) {}

MockAnnotator::MockAnnotator(graph::Lexicon lexicon, std::uint64_t seed, Options options)
    : lexicon_(std::move(lexicon)), seed_(seed), options_(options) {
  if (lexicon_.class_words.empty()) throw ValidationError("mock annotator needs a lexicon with classes");
}

std::string MockAnnotator::complete(const AnnotationRequest& req) {
  if (req.texts.empty() || req.texts.size() != req.labels.size())
    throw ContractError("mock annotator needs endpoint texts and labels");
  std::uint64_t h = seed_;
  for (std::size_t i = 0; i < req.texts.size(); ++i) {
    h = fnv1a64(req.texts[i], h);
    h = Rng::mix(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(req.labels[i])));
  }
  Rng rng(h);
  const auto classes = lexicon_.class_words.size();

  auto pick = [&](const std::vector<std::string>& bag, std::size_t n) {
    std::vector<std::string> copy = bag;
    rng.shuffle(copy.begin(), copy.end());
    copy.resize(std::min(n, copy.size()));
    return copy;
  };

  std::vector<std::string> concepts, distractors, quoted;
  for (std::size_t i = 0; i < req.texts.size(); ++i) {
    auto label = req.labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      // Unlabeled target: guess the class whose keywords the text uses most.
      std::size_t best = 0, best_hits = 0;
      for (std::size_t c = 0; c < classes; ++c) {
        std::set<std::string> bag(lexicon_.class_words[c].begin(), lexicon_.class_words[c].end());
        std::istringstream in(req.texts[i]);
        std::size_t hits = 0;
        for (std::string w; in >> w;) hits += bag.count(w);
        if (hits > best_hits) best = c, best_hits = hits;
      }
      label = static_cast<std::int32_t>(best);
    }
    for (auto& w : pick(lexicon_.class_words[static_cast<std::size_t>(label)], options_.keywords))
      concepts.push_back(std::move(w));
    if (classes > 1)
      for (std::size_t d = 0; d < options_.distractors; ++d) {
        auto other = rng.below(classes - 1);
        if (other >= static_cast<std::uint64_t>(label)) ++other;
        const auto& bag = lexicon_.class_words[other];
        distractors.push_back(bag[rng.below(bag.size())]);
      }
    std::vector<std::string> words;
    std::istringstream in(req.texts[i]);
    for (std::string w; in >> w;) words.push_back(w);
    if (!words.empty())
      for (auto& w : pick(words, options_.quoted)) quoted.push_back(std::move(w));
  }

  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& w : v) s += (s.empty() ? "" : ", ") + w;
    return s;
  };
  std::string out = "concepts: " + join(concepts);
  if (!distractors.empty()) out += "; also possibly: " + join(distractors);
  if (!quoted.empty()) out += "; evidence: " + join(quoted);
  return out;
}

HttpChatAnnotator::HttpChatAnnotator(std::string endpoint, std::string model, double temperature,
                                     std::string api_key, RetryPolicy retry)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      temperature_(temperature),
      retry_(retry) {
  if (endpoint_.empty()) throw ValidationError("chat annotator needs an endpoint (GAGA_LLM_ENDPOINT)");
}

std::string HttpChatAnnotator::id() const {
  std::ostringstream s;
  s << "chat:" << model_ << ":t" << temperature_;
  return s.str();
}

std::string HttpChatAnnotator::complete(const AnnotationRequest& req) {
  const json body{{"model", model_},
                  {"temperature", temperature_},
                  {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})}};
  const auto res = post_json_with_retry(endpoint_, body.dump(), api_key_, retry_);
  std::string text;
  try {
    const auto j = json::parse(res.body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_null()) text = content.get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed chat response: ") + e.what(), res.status);
  }
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw ProviderError("empty completion for " + target_str(req.target), res.status);
  return text;
}

}  // namespace gaga::providers
