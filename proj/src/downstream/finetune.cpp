#include "gaga/downstream/finetune.hpp"

#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "gaga/align/gcn.hpp"
#include "gaga/common/error.hpp"
#include "gaga/common/log.hpp"
#include "gaga/downstream/metrics.hpp"
#include "gaga/kernels/kernels.hpp"
#include "gaga/tensor/adam.hpp"
#include "gaga/tensor/ops.hpp"

namespace gaga::downstream {

using tensor::Tensor;
namespace ops = tensor::ops;
using Clock = std::chrono::steady_clock;
using SplitMetrics = std::map<std::string, std::map<std::string, double>>;

const char* task_name(Task t) { return t == Task::node ? "node" : "link"; }

Task parse_task(std::string_view s) {
  if (s == "node") return Task::node;
  if (s == "link") return Task::link;
  throw ValidationError("unknown task '" + std::string(s) + "' (expected node or link)");
}

nlohmann::json EvalReport::to_json() const {
  return {{"task", task_name(task)}, {"splits", splits}, {"best_epoch", best_epoch}, {"epochs_run", epochs_run}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.task = parse_task(j.at("task").get<std::string>());
  r.splits = j.at("splits").get<SplitMetrics>();
  r.best_epoch = j.at("best_epoch").get<std::size_t>();
  r.epochs_run = j.at("epochs_run").get<std::size_t>();
  return r;
}

std::size_t peak_rss_kb() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return static_cast<std::size_t>(u.ru_maxrss);
}

std::vector<graph::NodeId> labeled_subset(const graph::Tag& tag, double label_rate, std::uint64_t seed) {
  if (!(label_rate > 0 && label_rate <= 1)) throw ValidationError("label_rate must lie in (0, 1]");
  const auto train = tag.nodes_in(graph::Split::train);
  if (label_rate == 1.0) return train;
  std::map<std::int32_t, std::vector<graph::NodeId>> by_class;
  for (auto v : train) by_class[tag.labels[v]].push_back(v);
  Rng rng = Rng(seed).split("label-subset");
  std::vector<graph::NodeId> out;
  for (auto& [c, nodes] : by_class) {
    rng.shuffle(nodes.begin(), nodes.end());
    const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(label_rate * double(nodes.size()))));
    out.insert(out.end(), nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

Model snapshot(const Model& m) { return m.cast<float>(true); }

tensor::SparseMatrix<float> adjacency_of(const graph::CsrGraph& g) {
  const auto edges = g.edges();
  return align::normalized_adjacency<float>(g.num_nodes(), edges);
}

Tensor frozen_representation(const Model& m, const Tensor& x, const tensor::SparseMatrix<float>& adj) {
  const auto frozen = m.cast<float>(false);
  tensor::Tape tape;
  return frozen.represent(tape, x, adj);
}

std::vector<std::int32_t> predictions(const Model& m, const Tensor& x, const tensor::SparseMatrix<float>& adj) {
  const auto h = frozen_representation(m, x, adj);
  tensor::Tape tape;
  const auto logits = ops::matmul(tape, h, m.head.detach());
  std::vector<std::int32_t> pred(logits.rows());
  std::vector<double> row(logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = logits.at(i, c);
    pred[i] = argmax(row);
  }
  return pred;
}

double split_accuracy(const graph::Tag& tag, std::span<const std::int32_t> pred, graph::Split s) {
  std::vector<std::int32_t> p, y;
  for (auto v : tag.nodes_in(s)) p.push_back(pred[v]), y.push_back(tag.labels[v]);
  return accuracy(p, y);
}

std::vector<double> edge_scores(const Tensor& h, const Tensor& head, std::span<const graph::Edge> edges) {
  tensor::Tape tape;
  const auto logits = edge_logits(tape, h, head.detach(), edges);
  return {logits.data().begin(), logits.data().end()};
}

struct LinkEval {
  double mrr = 0, auc = 0;
};

LinkScores score_edges(const Tensor& h, const Tensor& head, std::span<const graph::Edge> positives,
                       std::span<const std::vector<graph::Edge>> negatives) {
  if (positives.empty()) throw ValidationError("link evaluation split has no positive edges");
  LinkScores out;
  out.positives = edge_scores(h, head, positives);
  for (std::size_t i = 0; i < positives.size(); ++i) out.negatives.push_back(edge_scores(h, head, negatives[i]));
  return out;
}

LinkEval link_metrics(const Tensor& h, const Tensor& head, std::span<const graph::Edge> positives,
                      std::span<const std::vector<graph::Edge>> negatives) {
  const auto scores = score_edges(h, head, positives, negatives);
  std::vector<double> all_neg;
  std::vector<std::size_t> ranks;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto& neg = scores.negatives[i];
    ranks.push_back(pessimistic_rank(scores.positives[i], neg));
    all_neg.insert(all_neg.end(), neg.begin(), neg.end());
  }
  return {mrr_at_10(ranks), auc(scores.positives, all_neg)};
}

void require_node_task(const graph::Tag& tag) {
  if (!tag.has_labels()) throw ValidationError("node task needs labeled nodes");
  if (tag.nodes_in(graph::Split::train).empty()) throw ValidationError("node task needs a training split");
  if (tag.nodes_in(graph::Split::valid).empty()) throw ValidationError("node task needs a validation split");
}

}  // namespace

SplitMetrics evaluate_node(const graph::Tag& tag, const graph::EmbeddingTable& features, const Model& m) {
  require_node_task(tag);
  const auto pred = predictions(m, features.to_tensor(), adjacency_of(tag.graph));
  SplitMetrics out;
  for (auto s : {graph::Split::train, graph::Split::valid, graph::Split::test})
    if (!tag.nodes_in(s).empty()) out[std::string(graph::split_name(s))]["accuracy"] = split_accuracy(tag, pred, s);
  return out;
}

SplitMetrics evaluate_link(const graph::Tag& tag, const graph::EdgeSplit& split, const graph::EmbeddingTable& features,
                           const Model& m) {
  const auto train_graph = graph::CsrGraph(tag.num_nodes(), split.train);
  const auto h = frozen_representation(m, features.to_tensor(), adjacency_of(train_graph));
  SplitMetrics out;
  const auto v = link_metrics(h, m.head, split.valid, split.valid_negatives);
  const auto t = link_metrics(h, m.head, split.test, split.test_negatives);
  out["valid"] = {{"mrr@10", v.mrr}, {"auc", v.auc}};
  out["test"] = {{"mrr@10", t.mrr}, {"auc", t.auc}};
  return out;
}

LinkScores link_scores(const graph::Tag& tag, const graph::EdgeSplit& split, const graph::EmbeddingTable& features,
                       const Model& m, graph::Split which) {
  if (which != graph::Split::valid && which != graph::Split::test)
    throw ContractError("link scores exist for the valid and test splits only");
  const auto train_graph = graph::CsrGraph(tag.num_nodes(), split.train);
  const auto h = frozen_representation(m, features.to_tensor(), adjacency_of(train_graph));
  return which == graph::Split::valid ? score_edges(h, m.head, split.valid, split.valid_negatives)
                                      : score_edges(h, m.head, split.test, split.test_negatives);
}

FinetuneResult finetune_node(const graph::Tag& tag, const graph::EmbeddingTable& features, const Model& init,
                             const FinetuneConfig& cfg) {
  require_node_task(tag);
  if (init.head.cols() != static_cast<std::size_t>(tag.num_classes))
    throw ValidationError("classification head has " + std::to_string(init.head.cols()) + " outputs for " +
                          std::to_string(tag.num_classes) + " classes");
  if (features.count() != tag.num_nodes()) throw ShapeError("feature rows do not match the node count");
  const auto x = features.to_tensor();
  const auto adj = adjacency_of(tag.graph);
  const auto train = labeled_subset(tag, cfg.label_rate, cfg.seed);
  std::vector<std::int32_t> labels;
  for (auto v : train) labels.push_back(tag.labels[v]);

  FinetuneResult out;
  Model m = snapshot(init);
  double best = split_accuracy(tag, predictions(m, x, adj), graph::Split::valid);
  out.model = snapshot(m);
  out.history.push_back({0, NAN, best});
  tensor::Adam adam(m.parameters(), tensor::AdamOptions{.lr = cfg.lr});
  std::size_t since = 0, epoch = 0;
  const auto start = Clock::now();
  for (epoch = 1; epoch <= cfg.epochs; ++epoch) {
    tensor::Tape tape;
    adam.zero_grad();
    const auto loss = node_loss(tape, m, x, adj, train, labels);
    tape.backward(loss);
    adam.step();
    const double valid = split_accuracy(tag, predictions(m, x, adj), graph::Split::valid);
    out.history.push_back({epoch, loss.item(), valid});
    if (valid > best) {
      best = valid, since = 0;
      out.model = snapshot(m);
      out.report.best_epoch = epoch;
    } else if (++since >= cfg.patience) {
      break;
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  out.report.task = Task::node;
  out.report.epochs_run = std::min(epoch, cfg.epochs);
  out.report.splits = evaluate_node(tag, features, out.model);
  out.report.splits["train"]["labeled_nodes"] = static_cast<double>(train.size());
  out.gauges = {secs, out.report.epochs_run ? secs / double(out.report.epochs_run) : 0.0, peak_rss_kb()};
  return out;
}

FinetuneResult finetune_link(const graph::Tag& tag, const graph::EdgeSplit& split,
                             const graph::EmbeddingTable& features, const Model& init, const FinetuneConfig& cfg) {
  if (init.head.cols() != 1) throw ValidationError("link head must have one output");
  if (split.train.empty()) throw ValidationError("link task needs training edges");
  if (features.count() != tag.num_nodes()) throw ShapeError("feature rows do not match the node count");
  const auto n = tag.num_nodes();
  const graph::CsrGraph train_graph(n, split.train);
  if (n * (n - 1) / 2 <= split.train.size()) throw ValidationError("training graph has no non-edges to sample");
  const auto x = features.to_tensor();
  const auto adj = adjacency_of(train_graph);
  Rng neg_rng = Rng(cfg.seed).split("train-negatives");

  auto valid_auc = [&](const Model& m) {
    return link_metrics(frozen_representation(m, x, adj), m.head, split.valid, split.valid_negatives).auc;
  };

  FinetuneResult out;
  Model m = snapshot(init);
  double best = valid_auc(m);
  out.model = snapshot(m);
  out.history.push_back({0, NAN, best});
  tensor::Adam adam(m.parameters(), tensor::AdamOptions{.lr = cfg.lr});
  std::size_t since = 0, epoch = 0;
  std::vector<graph::Edge> negatives(split.train.size());
  const auto start = Clock::now();
  for (epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (auto& e : negatives) {
      graph::NodeId a, b;
      do {
        a = static_cast<graph::NodeId>(neg_rng.below(n));
        b = static_cast<graph::NodeId>(neg_rng.below(n));
      } while (a == b || train_graph.has_edge(a, b));
      e = graph::canonical(a, b);
    }
    tensor::Tape tape;
    adam.zero_grad();
    const auto loss = link_loss(tape, m, x, adj, split.train, negatives);
    tape.backward(loss);
    adam.step();
    const double valid = valid_auc(m);
    out.history.push_back({epoch, loss.item(), valid});
    if (valid > best) {
      best = valid, since = 0;
      out.model = snapshot(m);
      out.report.best_epoch = epoch;
    } else if (++since >= cfg.patience) {
      break;
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  out.report.task = Task::link;
  out.report.epochs_run = std::min(epoch, cfg.epochs);
  out.report.splits = evaluate_link(tag, split, features, out.model);
  out.gauges = {secs, out.report.epochs_run ? secs / double(out.report.epochs_run) : 0.0, peak_rss_kb()};
  return out;
}

std::string history_csv(const std::vector<TrainRow>& rows, const std::string& metric_name) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,train_loss,valid_" << metric_name << "\n";
  for (const auto& r : rows) {
    os << r.epoch << ",";
    if (!std::isnan(r.train_loss)) os << r.train_loss;
    os << "," << r.valid_metric << "\n";
  }
  return os.str();
}

std::string prototype_distances_csv(const graph::Tag& tag, const graph::EmbeddingTable& features, const Model& m) {
  const auto frozen = m.encoder.cast<float>(false);
  tensor::Tape tape;
  const auto h = frozen.forward(tape, features.to_tensor(), adjacency_of(tag.graph));
  std::vector<std::int32_t> idx(h.rows());
  std::vector<double> dist(h.rows());
  kernels::nearest_rows(h.view(), m.codebook.view(), idx, dist);
  std::ostringstream os;
  os.precision(8);
  os << "node,prototype,distance\n";
  for (std::size_t i = 0; i < h.rows(); ++i) os << i << "," << idx[i] << "," << std::sqrt(dist[i]) << "\n";
  return os.str();
}

}  // namespace gaga::downstream
