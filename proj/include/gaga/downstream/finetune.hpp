#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaga/downstream/model.hpp"
#include "gaga/graph/edge_split.hpp"
#include "gaga/graph/embedding_table.hpp"
#include "gaga/graph/tag.hpp"

namespace gaga::downstream {

enum class Task { node, link };
const char* task_name(Task t);
Task parse_task(std::string_view s);

struct FinetuneConfig {
  std::size_t epochs = 200;
  double lr = 1e-3;
  std::size_t patience = 20;
  // Share of each class's training nodes that keep their label (at least one
  // per class). 1 uses the whole training split.
  double label_rate = 1.0;
  std::size_t dk = 0;  // 0 means the encoder width
  bool residual = false;
  double init_noise = 0.01;
  std::uint64_t seed = 0;
};

struct TrainRow {
  std::size_t epoch = 0;
  double train_loss = 0;
  double valid_metric = 0;
};

// Deterministic metrics only; timings go to a separate gauge record.
struct EvalReport {
  Task task = Task::node;
  std::map<std::string, std::map<std::string, double>> splits;  // split -> metric -> value
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

struct Gauges {
  double train_seconds = 0;
  double seconds_per_epoch = 0;
  std::size_t peak_rss_kb = 0;
};

struct FinetuneResult {
  Model model;  // the best-validation snapshot
  EvalReport report;
  std::vector<TrainRow> history;
  Gauges gauges;
};

// Training nodes kept under `label_rate`, in ascending id order.
std::vector<graph::NodeId> labeled_subset(const graph::Tag& tag, double label_rate, std::uint64_t seed);

FinetuneResult finetune_node(const graph::Tag& tag, const graph::EmbeddingTable& features, const Model& init,
                             const FinetuneConfig& cfg);

// Message passing uses the training edges only.
FinetuneResult finetune_link(const graph::Tag& tag, const graph::EdgeSplit& split,
                             const graph::EmbeddingTable& features, const Model& init, const FinetuneConfig& cfg);

// Accuracy per split for a fixed model.
std::map<std::string, std::map<std::string, double>> evaluate_node(const graph::Tag& tag,
                                                                    const graph::EmbeddingTable& features,
                                                                    const Model& m);
// MRR@10 and AUC for the valid and test splits.
std::map<std::string, std::map<std::string, double>> evaluate_link(const graph::Tag& tag,
                                                                    const graph::EdgeSplit& split,
                                                                    const graph::EmbeddingTable& features,
                                                                    const Model& m);

// Logits of an evaluation split's positives and of each positive's negative
// list, from a forward pass over the training edges.
struct LinkScores {
  std::vector<double> positives;
  std::vector<std::vector<double>> negatives;  // parallel to positives
};
LinkScores link_scores(const graph::Tag& tag, const graph::EdgeSplit& split, const graph::EmbeddingTable& features,
                       const Model& m, graph::Split which);

std::string history_csv(const std::vector<TrainRow>& rows, const std::string& metric_name);

// node,prototype,distance: nearest codebook row of each node's encoder output.
std::string prototype_distances_csv(const graph::Tag& tag, const graph::EmbeddingTable& features, const Model& m);

std::size_t peak_rss_kb();

}  // namespace gaga::downstream
