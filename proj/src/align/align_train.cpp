#include "gaga/align/align_train.hpp"

#include <numeric>

#include "gaga/align/losses.hpp"
#include "gaga/common/error.hpp"
#include "gaga/common/log.hpp"
#include "gaga/tensor/adam.hpp"

namespace gaga::align {

using tensor::Tensor;

GcnEncoder initial_encoder(std::size_t dim, const AlignConfig& cfg) {
  Rng rng = Rng(cfg.seed).split("encoder");
  return GcnEncoder::init(GcnShape{dim, cfg.hidden, cfg.layers, dim}, cfg.init_noise, rng);
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t seeds, std::size_t batch_size, Rng& rng) {
  if (batch_size < 2) throw ContractError("alignment batch size must be >= 2");
  std::vector<std::size_t> order(seeds);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < seeds; i += batch_size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(seeds, i + batch_size)));
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back()[0]);
    out.pop_back();
  }
  return out;
}

namespace {

struct PairSet {
  std::vector<SubgraphPair> pairs;
  Tensor text_x, anno_x;
};

PairSet build_pairs(const graph::Tag& tag, const graph::EmbeddingTable& text_features,
                    const annograph::AnnotationGraph& ag, const graph::EmbeddingTable& anno_features, int hops,
                    std::size_t cap, int anno_hops) {
  if (text_features.count() != tag.num_nodes())
    throw ShapeError("text features have " + std::to_string(text_features.count()) + " rows for " +
                     std::to_string(tag.num_nodes()) + " nodes");
  if (anno_features.count() != ag.num_nodes())
    throw ShapeError("annotation features have " + std::to_string(anno_features.count()) + " rows for " +
                     std::to_string(ag.num_nodes()) + " annotations");
  if (text_features.dim() != anno_features.dim())
    throw ShapeError("text and annotation embeddings differ in width");
  PairSet s;
  for (const auto& t : ag.targets) s.pairs.push_back(sample_subgraph_pair(tag, ag, t, hops, cap, anno_hops));
  s.text_x = text_features.to_tensor();
  s.anno_x = anno_features.to_tensor();
  return s;
}

struct BatchGraphs {
  GraphBatch<float> text, anno;
};

BatchGraphs batch_graphs(const PairSet& s, std::span<const std::size_t> members) {
  std::vector<const Subgraph*> t, a;
  for (auto i : members) t.push_back(&s.pairs[i].text), a.push_back(&s.pairs[i].annotation);
  return {make_batch<float>(t), make_batch<float>(a)};
}

}  // namespace

PairEmbeddings embed_pairs(const GcnEncoder& enc, const graph::Tag& tag, const graph::EmbeddingTable& text_features,
                           const annograph::AnnotationGraph& ag, const graph::EmbeddingTable& anno_features, int hops,
                           std::size_t node_cap, int anno_hops) {
  const auto s = build_pairs(tag, text_features, ag, anno_features, hops, node_cap, anno_hops);
  std::vector<std::size_t> all(s.pairs.size());
  std::iota(all.begin(), all.end(), 0);
  const auto b = batch_graphs(s, all);
  const auto frozen = enc.cast<float>(false);
  tensor::Tape tape;
  return {frozen.encode_batch(tape, s.text_x, b.text), frozen.encode_batch(tape, s.anno_x, b.anno)};
}

AlignResult align_train(const graph::Tag& tag, const graph::EmbeddingTable& text_features,
                        const annograph::AnnotationGraph& ag, const graph::EmbeddingTable& anno_features,
                        const AlignConfig& cfg) {
  if (ag.num_nodes() < 2) throw ContractError("alignment needs at least 2 annotated seeds");
  if (!(cfg.alpha >= 0 && cfg.alpha <= 1)) throw ContractError("alpha must lie in [0, 1]");
  const auto s = build_pairs(tag, text_features, ag, anno_features, cfg.hops, cfg.node_cap, cfg.anno_hops);
  const auto n = s.pairs.size();

  AlignResult out;
  out.encoder = initial_encoder(text_features.dim(), cfg);
  Rng shuffle_rng = Rng(cfg.seed).split("align-batches");
  Rng reseed_rng = Rng(cfg.seed).split("codebook-reseed");

  // The codebook starts from the annotation-side pool of the first epoch's
  // encoder, i.e. the initial weights.
  {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const auto b = batch_graphs(s, all);
    tensor::Tape tape;
    const auto pool = out.encoder.cast<float>(false).encode_batch(tape, s.anno_x, b.anno);
    out.codebook = init_codebook(pool, cfg.kp, cfg.gamma, Rng(cfg.seed).split("codebook").next_u64());
  }

  tensor::Adam adam(out.encoder.parameters(), tensor::AdamOptions{.lr = cfg.lr});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochLog entry;
    const auto batches = epoch_batches(n, cfg.batch_size, shuffle_rng);
    for (const auto& members : batches) {
      const auto b = batch_graphs(s, members);
      tensor::Tape tape;
      adam.zero_grad();
      const auto h_t = out.encoder.encode_batch(tape, s.text_x, b.text);
      const auto h_a = out.encoder.encode_batch(tape, s.anno_x, b.anno);
      std::vector<std::int32_t> assign;
      CombinedLossParts parts;
      const auto loss = loss_combined(tape, h_t, h_a, out.codebook.z, cfg.alpha, &assign, &parts);
      tape.backward(loss);
      adam.step();
      update_codebook(out.codebook, h_a.detach(), assign, reseed_rng, cfg.reseed_after);
      entry.loss += loss.item();
      entry.prototype += parts.prototype;
      entry.pairs += parts.pairs;
    }
    const auto nb = static_cast<double>(batches.size());
    entry.loss /= nb, entry.prototype /= nb, entry.pairs /= nb;
    out.log.push_back(entry);
    if (epoch == 0 || (epoch + 1) % 50 == 0 || epoch + 1 == cfg.epochs)
      log::debug("align epoch " + std::to_string(epoch + 1) + " loss " + std::to_string(entry.loss));
  }
  return out;
}

tensor::Checkpoint encoder_checkpoint(const GcnEncoder& enc, const PrototypeCodebook& cb) {
  tensor::Checkpoint ck;
  ck.put("adapter", enc.adapter());
  for (std::size_t l = 0; l < enc.weights().size(); ++l) ck.put("w" + std::to_string(l), enc.weights()[l]);
  ck.put("codebook", cb.z);
  ck.put("ema_counts", Tensor({cb.size()}, std::vector<float>(cb.counts.begin(), cb.counts.end())));
  ck.put("ema_idle", Tensor({cb.size()}, std::vector<float>(cb.idle.begin(), cb.idle.end())));
  ck.meta["layers"] = enc.weights().size();
  ck.meta["gamma"] = cb.gamma;
  return ck;
}

void save_alignment(const std::filesystem::path& dir, const AlignResult& result, const nlohmann::json& config) {
  auto ck = encoder_checkpoint(result.encoder, result.codebook);
  nlohmann::json log = nlohmann::json::array();
  for (std::size_t e = 0; e < result.log.size(); ++e)
    log.push_back({{"epoch", e + 1},
                   {"loss", result.log[e].loss},
                   {"prototype", result.log[e].prototype},
                   {"pairs", result.log[e].pairs}});
  ck.meta["config"] = config;
  ck.meta["log"] = log;
  tensor::save_checkpoint(dir, ck);
}

AlignResult load_alignment(const std::filesystem::path& dir) {
  const auto ck = tensor::load_checkpoint(dir);
  AlignResult r;
  if (!ck.contains("adapter") || !ck.meta.contains("layers"))
    throw ValidationError("checkpoint at " + dir.string() + " is not an alignment checkpoint");
  const auto layers = ck.meta.at("layers").get<std::size_t>();
  std::vector<Tensor> w;
  for (std::size_t l = 0; l < layers; ++l) w.push_back(ck.get("w" + std::to_string(l)).clone());
  for (auto& t : w) t.set_requires_grad(true);
  auto adapter = ck.get("adapter").clone();
  adapter.set_requires_grad(true);
  r.encoder = GcnEncoder(adapter, std::move(w));
  r.codebook.z = ck.get("codebook").clone();
  r.codebook.gamma = ck.meta.at("gamma").get<double>();
  for (float c : ck.get("ema_counts").data()) r.codebook.counts.push_back(c);
  for (float c : ck.get("ema_idle").data()) r.codebook.idle.push_back(static_cast<std::int32_t>(c));
  r.codebook.validate();
  if (ck.meta.contains("log"))
    for (const auto& e : ck.meta["log"])
      r.log.push_back({e.at("loss").get<double>(), e.at("prototype").get<double>(), e.at("pairs").get<double>()});
  return r;
}

}  // namespace gaga::align
