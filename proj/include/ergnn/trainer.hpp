#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ergnn/controller.hpp"
#include "ergnn/graph.hpp"
#include "ergnn/metrics.hpp"
#include "ergnn/model.hpp"
#include "ergnn/types.hpp"

namespace ergnn {

struct TrainConfig {
  int epochs = 50;
  int layers = 1;
  double learning_rate = 0.01;
  int batch_size = 256;
  double lambda = 1.0;  // weight of the similarity loss in the total loss
  double tau = 0.02;
  std::uint64_t seed = 0;
  int d_out = 16;
  AggregationMode mode = AggregationMode::full;
  std::string dataset_dir;    // empty -> generate `synthetic`
  SyntheticConfig synthetic;

  void validate() const;
};

/// Losses of one batch; total = gnn + lambda * sim.
struct LossParts {
  double total = 0.0;
  double gnn = 0.0;
  double sim = 0.0;
};

struct EpochReport {
  int epoch = 0;  // 1-based
  double loss_gnn = 0.0;
  double loss_sim = 0.0;
  double loss_total = 0.0;
  std::vector<std::vector<double>> p;           // [layer][relation], end of epoch
  std::vector<std::vector<double>> dbar;        // [layer][relation]
  std::vector<std::vector<bool>> terminated;    // [layer][relation]
  Metrics val;
  bool val_present = false;
};

struct DatasetInfo {
  std::int64_t num_nodes = 0;
  int num_relations = 0;
  std::int64_t feature_dim = 0;
  std::vector<std::int64_t> directed_edge_counts;
  std::string hash_hex;
};

DatasetInfo dataset_info(const MultiRelationGraph& g);

struct TrainedModel {
  Model model;
  std::vector<std::vector<double>> frozen_p;  // [layer][relation]
  TrainConfig config;
  DatasetInfo dataset;
};

struct TrainResult {
  TrainedModel trained;
  std::vector<EpochReport> reports;
};

/// sigmoid(linear(h)): the classifier head is a single linear layer to one
/// logit.
Mat classify(const Parameter& head_weight, const Parameter& head_bias, const Mat& embeddings);

/// Forward + loss + full backward for one train batch. Zeroes all gradients
/// first, then populates them (the similarity-loss part scaled by lambda).
LossParts total_loss(const MultiRelationGraph& g, Model& model, const SelectionTable& table,
                     const std::vector<std::vector<double>>& p, std::span<const NodeId> batch,
                     double lambda);

/// Mini-batch training with the per-epoch controller step. Deterministic:
/// identical (config, graph) give bit-identical reports and parameters.
TrainResult train(const TrainConfig& config, const MultiRelationGraph& g,
                  const std::function<void(const EpochReport&)>& on_epoch = nullptr);

/// Probabilities under the trained model's frozen thresholds.
std::vector<double> predict_proba(const TrainedModel& trained, const MultiRelationGraph& g,
                                  std::span<const NodeId> nodes);

/// Hard label = probability >= 0.5.
std::vector<int> hard_labels(std::span<const double> probabilities);

Metrics evaluate(const TrainedModel& trained, const MultiRelationGraph& g, Split split);

void save_checkpoint(const TrainedModel& trained, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

void save_train_report(const std::vector<EpochReport>& reports, const std::filesystem::path& path);

}  // namespace ergnn
