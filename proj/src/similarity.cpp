#include "ergnn/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "ergnn/nn.hpp"

namespace ergnn {

namespace {

double raw_score(const RelationScorer& scorer, const Mat& inputs, NodeId v) {
  if (inputs.cols() != scorer.input_dim()) {
    throw DimensionError("similarity_score: input width " + std::to_string(inputs.cols()) +
                         " does not match scorer width " + std::to_string(scorer.input_dim()));
  }
  if (v < 0 || v >= inputs.rows()) {
    throw std::out_of_range("similarity_score: node " + std::to_string(v) + " out of range");
  }
  return scorer.weight.value.row(0).dot(inputs.row(v)) + scorer.bias.value(0, 0);
}

}  // namespace

double similarity_score(const RelationScorer& scorer, const Mat& inputs, NodeId v) {
  return nn::sigmoid(raw_score(scorer, inputs, v));
}

double score_distance(const RelationScorer& scorer, const Mat& inputs, NodeId v, NodeId u) {
  return std::abs(similarity_score(scorer, inputs, v) - similarity_score(scorer, inputs, u));
}

std::size_t keep_count(double p, std::size_t degree) {
  if (degree == 0) return 0;
  const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(degree)));
  return std::min(k, degree);
}

std::vector<NodeId> rank_neighbors(const RelationScorer& scorer, const Mat& inputs,
                                   NodeId v, std::span<const NodeId> neighbor_list) {
  const double center = similarity_score(scorer, inputs, v);
  std::vector<std::pair<double, NodeId>> keyed;
  keyed.reserve(neighbor_list.size());
  for (const NodeId u : neighbor_list) {
    keyed.emplace_back(std::abs(similarity_score(scorer, inputs, u) - center), u);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<NodeId> out;
  out.reserve(keyed.size());
  for (const auto& [d, u] : keyed) out.push_back(u);
  return out;
}

std::vector<NodeId> filter_neighbors(const MultiRelationGraph& g,
                                     const RelationScorer& scorer, const Mat& inputs,
                                     NodeId v, int r, double p) {
  if (!(p > 0.0) || p > 1.0) {
    throw ValidationError("filter threshold p must lie in (0, 1]");
  }
  auto ranked = rank_neighbors(scorer, inputs, v, g.neighbors(v, r));
  ranked.resize(keep_count(p, ranked.size()));
  return ranked;
}

double similarity_loss(std::vector<RelationScorer>& scorers, const Mat& inputs,
                       const MultiRelationGraph& g, std::span<const NodeId> batch) {
  if (batch.empty()) {
    throw ValidationError("similarity_loss: batch must be nonempty");
  }
  for (const NodeId v : batch) {
    if (v < 0 || v >= g.num_nodes()) {
      throw std::out_of_range("similarity_loss: node " + std::to_string(v) + " out of range");
    }
    if (g.split[static_cast<std::size_t>(v)] != Split::train) {
      throw ValidationError("similarity_loss: node " + std::to_string(v) +
                            " is not in the train mask");
    }
  }
  double loss = 0.0;
  Mat p(1, 1), y(1, 1);
  for (RelationScorer& scorer : scorers) {
    for (const NodeId v : batch) {
      const double score = nn::sigmoid(raw_score(scorer, inputs, v));
      p(0, 0) = score;
      y(0, 0) = static_cast<double>(g.labels[static_cast<std::size_t>(v)]);
      loss += nn::bce_loss(p, y);
      const double dz = score - y(0, 0);  // fused logit gradient
      scorer.weight.grad.row(0) += dz * inputs.row(v);
      scorer.bias.grad(0, 0) += dz;
    }
  }
  return loss;
}

}  // namespace ergnn
