#pragma once

// Brute-force reference implementations the unit and acceptance suites check
// the library against. Everything here is deliberately naive and independent
// of the code paths under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ergnn/graph.hpp"
#include "ergnn/metrics.hpp"
#include "ergnn/types.hpp"

namespace oracles {

using ergnn::Mat;
using ergnn::NodeId;

/// y = x * W^T + b by explicit triple loop.
inline Mat naive_linear(const Mat& w, const Mat& b, const Mat& x) {
  Mat y(x.rows(), w.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.rows(); ++j) {
      double acc = b(0, j);
      for (Eigen::Index k = 0; k < x.cols(); ++k) acc += x(i, k) * w(j, k);
      y(i, j) = acc;
    }
  }
  return y;
}

/// Per-element BCE accumulation with the same 1e-12 clamp.
inline double naive_bce(const Mat& p, const Mat& y) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      double pc = p(i, j);
      pc = std::max(1e-12, std::min(1.0 - 1e-12, pc));
      loss -= y(i, j) * std::log(pc) + (1.0 - y(i, j)) * std::log(1.0 - pc);
    }
  }
  return loss;
}

/// Neighbor list by scanning an explicit undirected edge list.
inline std::vector<NodeId> scan_neighbors(const std::vector<std::pair<NodeId, NodeId>>& edges,
                                          NodeId v) {
  std::vector<NodeId> out;
  for (const auto& [a, b] : edges) {
    if (a == v) out.push_back(b);
    if (b == v && a != v) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Full sort by (distance, id), then truncate to ceil(p * n).
inline std::vector<NodeId> sort_truncate_filter(const std::vector<NodeId>& neighbors,
                                                const std::vector<double>& distances, double p) {
  std::vector<std::size_t> idx(neighbors.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (distances[a] != distances[b]) return distances[a] < distances[b];
    return neighbors[a] < neighbors[b];
  });
  std::size_t keep = neighbors.empty()
                         ? 0
                         : static_cast<std::size_t>(
                               std::ceil(p * static_cast<double>(neighbors.size())));
  keep = std::min(keep, neighbors.size());
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < keep; ++i) out.push_back(neighbors[idx[i]]);
  return out;
}

/// Confusion counts by loop plus all-pairs AUC with 1/2 for ties.
inline ergnn::Metrics naive_metrics(const std::vector<double>& probs,
                                    const std::vector<int>& labels, double threshold = 0.5) {
  ergnn::Metrics m;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= threshold;
    if (labels[i] == 1) {
      pred ? ++m.tp : ++m.fn;
    } else {
      pred ? ++m.fp : ++m.tn;
    }
  }
  m.precision = m.tp + m.fp > 0 ? double(m.tp) / double(m.tp + m.fp) : 0.0;
  m.recall = m.tp + m.fn > 0 ? double(m.tp) / double(m.tp + m.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.accuracy = double(m.tp + m.tn) / double(probs.size());
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < probs.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (probs[i] > probs[j]) wins += 1.0;
      else if (probs[i] == probs[j]) wins += 0.5;
    }
  }
  m.auc = pairs > 0 ? wins / static_cast<double>(pairs)
                    : std::numeric_limits<double>::quiet_NaN();
  return m;
}

/// Assembles a validated graph from explicit parts; edges are undirected.
inline ergnn::MultiRelationGraph make_graph(
    const Mat& features, const std::vector<int>& labels,
    const std::vector<std::vector<std::pair<NodeId, NodeId>>>& relation_edges,
    const std::vector<ergnn::Split>& split) {
  ergnn::MultiRelationGraph g;
  g.features = features;
  g.labels = labels;
  g.split = split;
  const auto n = static_cast<std::size_t>(features.rows());
  int idx = 0;
  for (const auto& edges : relation_edges) {
    std::vector<std::vector<NodeId>> rows(n);
    for (const auto& [a, b] : edges) {
      rows[static_cast<std::size_t>(a)].push_back(b);
      if (a != b) rows[static_cast<std::size_t>(b)].push_back(a);
    }
    ergnn::Relation rel;
    rel.name = "r" + std::to_string(idx++);
    rel.offsets.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) {
      auto& row = rows[v];
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      rel.offsets[v + 1] = rel.offsets[v] + static_cast<std::int64_t>(row.size());
      rel.neighbors.insert(rel.neighbors.end(), row.begin(), row.end());
    }
    g.relations.push_back(std::move(rel));
  }
  return g;
}

}  // namespace oracles
