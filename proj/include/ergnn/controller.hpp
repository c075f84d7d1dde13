#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ergnn/graph.hpp"
#include "ergnn/similarity.hpp"
#include "ergnn/types.hpp"

namespace ergnn {

// One controller exists per (relation, layer). The scalar p it maintains is
// both the neighbor filtering threshold and the central-node weight. Each
// epoch the trainer records the average fraud-neighbor distance; the
// controller then steps p by +/-tau (reward when the distance dropped,
// penalty otherwise, ties included) and freezes once the last-10-epoch
// action sum settles within 2*tau, or at the final epoch.
class RelationController {
 public:
  explicit RelationController(double initial_p = 0.5, double tau = 0.02);

  double p() const { return p_; }
  double tau() const { return tau_; }
  double p_min() const { return p_min_; }
  bool terminated() const { return terminated_; }
  double frozen_p() const;

  const std::vector<double>& distance_history() const { return distances_; }
  const std::vector<double>& action_history() const { return actions_; }

  /// Appends this epoch's average distance. No-op side effects beyond the
  /// history; the action step is separate.
  void record_distance(double dbar);

  /// Applies the signed step to p and returns it. Requires two recorded
  /// distances (the first epoch takes no action) and a live controller.
  double apply_action();

  /// True once (epoch >= 10 and |sum of the last 10 actions| <= 2*tau) or
  /// epoch == total_epochs. Freezes p as a side effect when it fires.
  bool check_termination(int epoch, int total_epochs);

 private:
  double p_;
  double tau_;
  double p_min_;
  double frozen_p_ = -1.0;
  bool terminated_ = false;
  std::vector<double> distances_;
  std::vector<double> actions_;
};

/// Average distance between labeled fraud train nodes and their kept
/// neighbors, normalized by the full train-mask size. `filtered` supplies
/// C_{v,r} for any node; `dist` supplies the pairwise distance.
double average_distance(const MultiRelationGraph& g,
                        const std::function<std::span<const NodeId>(NodeId)>& filtered,
                        const std::function<double(NodeId, NodeId)>& dist);

/// Convenience form computing distances from the scorer and the kept sets
/// from (ranked lists, p). keep_all covers the filter-disabled ablation.
double average_distance(const MultiRelationGraph& g, const RelationScorer& scorer,
                        const Mat& inputs,
                        const std::vector<std::vector<NodeId>>& ranked_by_node,
                        double p, bool keep_all = false);

}  // namespace ergnn
