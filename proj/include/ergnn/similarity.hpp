#pragma once

#include <span>
#include <vector>

#include "ergnn/graph.hpp"
#include "ergnn/types.hpp"

// Neighbor noise filter: a per-relation linear scorer maps a node's current
// embedding to a fraud-propensity score in (0, 1); the distance between two
// nodes is the absolute difference of their scores, and filtering keeps the
// closest ceil(p * degree) neighbors.
namespace ergnn {

/// Label-aware scorer for one (relation, layer) pair.
struct RelationScorer {
  Parameter weight;  // 1 x d_in
  Parameter bias;    // 1 x 1

  RelationScorer() = default;
  explicit RelationScorer(Eigen::Index d_in) : weight(1, d_in), bias(1, 1) {}
  Eigen::Index input_dim() const { return weight.cols(); }
};

/// sigmoid(w . x + b); `inputs` holds one embedding row per node.
double similarity_score(const RelationScorer& scorer, const Mat& inputs, NodeId v);

/// |score(v) - score(u)|, in [0, 1].
double score_distance(const RelationScorer& scorer, const Mat& inputs, NodeId v, NodeId u);

/// Number of neighbors kept under threshold p: ceil(p * degree).
std::size_t keep_count(double p, std::size_t degree);

/// Neighbor list reordered by ascending (distance to v, node id). Filtering
/// under any p is a prefix of this ranking.
std::vector<NodeId> rank_neighbors(const RelationScorer& scorer, const Mat& inputs,
                                   NodeId v, std::span<const NodeId> neighbor_list);

/// The ceil(p * |N_r(v)|) neighbors of v most similar to it; ties broken by
/// ascending node id. p must lie in (0, 1].
std::vector<NodeId> filter_neighbors(const MultiRelationGraph& g,
                                     const RelationScorer& scorer, const Mat& inputs,
                                     NodeId v, int r, double p);

/// Summed BCE between per-relation scores and node labels over a train batch;
/// accumulates gradients into every scorer. Returns the loss value.
double similarity_loss(std::vector<RelationScorer>& scorers, const Mat& inputs,
                       const MultiRelationGraph& g, std::span<const NodeId> batch);

}  // namespace ergnn
