#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ergnn/graph.hpp"
#include "ergnn/metrics.hpp"
#include "ergnn/trainer.hpp"
#include "ergnn/types.hpp"

namespace ergnn {

enum class BaselineKind {
  gcn,
  mean_sage,
  ergnn_no_filter,
  ergnn_no_enhancer,
  ergnn_full,
};

std::string to_string(BaselineKind k);
BaselineKind baseline_kind_from_string(const std::string& s);
std::vector<BaselineKind> all_baseline_kinds();

/// Union-of-relations adjacency with self loops, symmetrically normalized:
/// D^(-1/2) (A + I) D^(-1/2). Dense; the harness targets desk-scale graphs.
Mat gcn_normalized_adjacency(const MultiRelationGraph& g);

/// Row-normalized union adjacency (no self loops); rows of isolated nodes
/// are zero so only the concatenated self features survive.
Mat mean_neighbor_operator(const MultiRelationGraph& g);

/// Two-layer graph convolution on the relation union, trained full-batch
/// with the same optimizer/epoch/seed protocol. Returns test metrics.
Metrics run_gcn(const MultiRelationGraph& g, const TrainConfig& config);

/// Two-layer mean-aggregator model (concat self with neighbor mean), same
/// protocol as run_gcn.
Metrics run_mean_sage(const MultiRelationGraph& g, const TrainConfig& config);

/// Full pipeline via train(), with the aggregation mode the kind implies.
Metrics run_ergnn(const MultiRelationGraph& g, TrainConfig config, AggregationMode mode);

struct BenchRun {
  BaselineKind kind;
  std::uint64_t seed = 0;
  Metrics test;
  double wall_time_seconds = 0.0;
};

/// One training run per (kind, seed); base.seed is overridden per run.
std::vector<BenchRun> run_benchmark(const MultiRelationGraph& g, const TrainConfig& base,
                                    const std::vector<BaselineKind>& kinds,
                                    const std::vector<std::uint64_t>& seeds);

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;
};

struct BenchSummary {
  BaselineKind kind;
  int runs = 0;
  MetricStats f1, recall, precision, accuracy, auc;
};

std::vector<BenchSummary> summarize_benchmark(const std::vector<BenchRun>& runs);

/// Aligned text rendering of the summary.
std::string render_benchmark_table(const std::vector<BenchSummary>& summary);

/// Per-run CSV flattening (metrics only, so reruns are byte-identical).
std::string benchmark_csv(const std::vector<BenchRun>& runs);

/// JSON array of {kind, seed, metrics, wall_time_seconds}.
nlohmann::json benchmark_json(const std::vector<BenchRun>& runs);

}  // namespace ergnn
