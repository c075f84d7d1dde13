#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ergnn/types.hpp"

namespace ergnn {

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

const char* to_string(Split s);
Split split_from_string(const std::string& s);

/// One relation's undirected adjacency in CSR form. Neighbor lists are
/// sorted ascending with no duplicates; every edge appears in both rows.
struct Relation {
  std::string name;
  std::vector<std::int64_t> offsets;  // size num_nodes + 1
  std::vector<NodeId> neighbors;
};

struct MultiRelationGraph {
  Mat features;             // num_nodes x feature_dim
  std::vector<int> labels;  // 0 = benign, 1 = fraud
  std::vector<Relation> relations;
  std::vector<Split> split;

  Eigen::Index num_nodes() const { return features.rows(); }
  Eigen::Index feature_dim() const { return features.cols(); }
  int num_relations() const { return static_cast<int>(relations.size()); }

  /// Full sorted neighbor list of v under relation r; empty list permitted.
  std::span<const NodeId> neighbors(NodeId v, int r) const;

  std::vector<NodeId> nodes_in(Split s) const;
  std::int64_t count_in(Split s) const;

  /// Content hash over features, labels, adjacency and split.
  std::uint64_t fingerprint() const;

  /// Checks every structural invariant; throws ValidationError on the first
  /// violation. load_dataset and generate_synthetic both end with this.
  void validate() const;

  bool operator==(const MultiRelationGraph& other) const;
};

struct SyntheticConfig {
  int n_benign = 900;
  int n_fraud = 100;
  int feature_dim = 2;
  std::vector<double> benign_mean{0.0, 0.0};
  std::vector<double> fraud_mean{2.0, 2.0};
  // Fraction of each fraud node's edges attached to benign nodes.
  double camouflage_ratio = 0.5;
  double avg_degree = 10.0;
  int num_relations = 2;
  std::uint64_t seed = 7;
  double train_frac = 0.4;
  double val_frac = 0.2;

  void validate() const;
};

struct LoadStats {
  std::int64_t reverse_edges_added = 0;
  bool split_file_present = false;
};

/// Reads features.csv, labels.csv, edges_<name>.csv (one per relation, taken
/// in lexicographic file-name order) and optional split.csv. Missing reverse
/// edges are added; the count lands in `stats` when given.
MultiRelationGraph load_dataset(const std::filesystem::path& dir,
                                LoadStats* stats = nullptr,
                                std::uint64_t split_seed = 0);

/// Writes the CSV dataset so that load_dataset reproduces the graph exactly.
void save_dataset(const MultiRelationGraph& g, const std::filesystem::path& dir);

/// Camouflaged-fraud generator: class-separated Gaussian features, per-node
/// edge sampling where a fraud node's edge targets benign nodes with
/// probability camouflage_ratio (benign edges stay benign-benign).
MultiRelationGraph generate_synthetic(const SyntheticConfig& config);

/// Per-class proportional allocation, remainder to test. Deterministic for a
/// given seed.
std::vector<Split> stratified_split(std::span<const int> labels, double train_frac,
                                    double val_frac, std::uint64_t seed);

}  // namespace ergnn
