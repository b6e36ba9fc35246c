#include "gaga/graph/synth.hpp"

#include <array>
#include <cmath>
#include <unordered_set>

#include "gaga/common/error.hpp"
#include "gaga/common/rng.hpp"

namespace gaga::graph {

namespace {

constexpr std::array<const char*, 16> kOnsets{"b", "d", "f", "g", "k", "l", "m", "n",
                                              "p", "r", "s", "t", "v", "z", "sh", "tr"};
constexpr std::array<const char*, 6> kVowels{"a", "e", "i", "o", "u", "ai"};

std::string pseudo_word(Rng& rng) {
  std::string w;
  const auto syllables = 2 + rng.below(3);
  for (std::uint64_t s = 0; s < syllables; ++s) {
    w += kOnsets[rng.below(kOnsets.size())];
    w += kVowels[rng.below(kVowels.size())];
  }
  return w;
}

}  // namespace

Lexicon make_lexicon(std::int32_t classes, const VocabSpec& vocab, std::uint64_t seed) {
  if (classes < 1) throw ValidationError("synthetic graph needs at least one class");
  if (vocab.keywords_per_class == 0 || vocab.noise_words == 0)
    throw ValidationError("vocabulary needs keywords and noise words");
  Rng rng = Rng(seed).split("lexicon");
  std::unordered_set<std::string> used;
  auto fresh = [&] {
    for (;;) {
      auto w = pseudo_word(rng);
      if (used.insert(w).second) return w;
    }
  };
  Lexicon lex;
  lex.class_words.resize(static_cast<std::size_t>(classes));
  for (auto& bag : lex.class_words)
    for (std::size_t i = 0; i < vocab.keywords_per_class; ++i) bag.push_back(fresh());
  for (std::size_t i = 0; i < vocab.noise_words; ++i) lex.noise_words.push_back(fresh());
  return lex;
}

Tag synth_tag(const SynthSpec& spec, std::uint64_t seed) {
  if (!(spec.p_out >= 0.0 && spec.p_out < spec.p_in && spec.p_in <= 1.0))
    throw ValidationError("synthetic graph needs 0 <= p_out < p_in <= 1 (got p_in=" + std::to_string(spec.p_in) +
                          ", p_out=" + std::to_string(spec.p_out) + ")");
  if (spec.nodes_per_class == 0) throw ValidationError("nodes_per_class must be positive");
  if (spec.vocab.keyword_fraction < 0.0 || spec.vocab.keyword_fraction > 1.0)
    throw ValidationError("keyword_fraction must lie in [0, 1]");
  const auto lex = make_lexicon(spec.classes, spec.vocab, seed);
  const auto n = static_cast<std::size_t>(spec.classes) * spec.nodes_per_class;
  const Rng root(seed);

  Tag tag;
  tag.num_classes = spec.classes;
  tag.labels.resize(n);
  tag.texts.resize(n);
  Rng text_rng = root.split("text");
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::int32_t>(i / spec.nodes_per_class);
    tag.labels[i] = c;
    const auto& bag = lex.class_words[static_cast<std::size_t>(c)];
    std::string text;
    for (std::size_t t = 0; t < spec.vocab.tokens_per_node; ++t) {
      if (t) text += ' ';
      if (text_rng.bernoulli(spec.vocab.keyword_fraction))
        text += bag[text_rng.below(bag.size())];
      else
        text += lex.noise_words[text_rng.below(lex.noise_words.size())];
    }
    tag.texts[i] = std::move(text);
  }

  Rng edge_rng = root.split("edges");
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) {
      const double p = tag.labels[u] == tag.labels[v] ? spec.p_in : spec.p_out;
      if (edge_rng.bernoulli(p)) edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }
  tag.graph = CsrGraph(n, edges);

  tag.split.assign(n, Split::none);
  Rng split_rng = root.split("split");
  for (std::int32_t c = 0; c < spec.classes; ++c) {
    std::vector<NodeId> members(spec.nodes_per_class);
    for (std::size_t k = 0; k < members.size(); ++k)
      members[k] = static_cast<NodeId>(static_cast<std::size_t>(c) * spec.nodes_per_class + k);
    split_rng.shuffle(members.begin(), members.end());
    const auto m = members.size();
    const auto n_train = m * 6 / 10, n_valid = m * 2 / 10;
    for (std::size_t k = 0; k < m; ++k)
      tag.split[static_cast<std::size_t>(members[k])] =
          k < n_train ? Split::train : (k < n_train + n_valid ? Split::valid : Split::test);
  }
  tag.validate();
  return tag;
}

}  // namespace gaga::graph
