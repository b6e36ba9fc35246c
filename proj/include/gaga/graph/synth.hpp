#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gaga/graph/tag.hpp"

namespace gaga::graph {

struct VocabSpec {
  std::size_t keywords_per_class = 12;
  std::size_t noise_words = 200;
  std::size_t tokens_per_node = 24;
  double keyword_fraction = 0.25;  // chance each token is drawn from the class bag
};

struct SynthSpec {
  std::int32_t classes = 4;
  std::size_t nodes_per_class = 125;
  double p_in = 0.05;
  double p_out = 0.005;
  VocabSpec vocab;
};

// Pseudo-word vocabulary behind a synthetic graph. The mock annotator reads
// the same lexicon, so its answers are grounded in the class bags.
struct Lexicon {
  std::vector<std::vector<std::string>> class_words;  // [class][keyword]
  std::vector<std::string> noise_words;
};

Lexicon make_lexicon(std::int32_t classes, const VocabSpec& vocab, std::uint64_t seed);

// Stochastic block model: node i belongs to class i / nodes_per_class; each
// pair is linked with p_in inside a class and p_out across. Each class's
// members are shuffled and split 60/20/20 (floors for train and valid, the
// remainder to test).
Tag synth_tag(const SynthSpec& spec, std::uint64_t seed);

}  // namespace gaga::graph
