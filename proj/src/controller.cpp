#include "ergnn/controller.hpp"

#include <algorithm>
#include <cmath>

namespace ergnn {

RelationController::RelationController(double initial_p, double tau)
    : p_(initial_p), tau_(tau), p_min_(tau) {
  if (!(tau > 0.0) || tau >= 0.5) {
    throw ValidationError("tau must lie in (0, 0.5)");
  }
  if (initial_p < p_min_ || initial_p > 1.0) {
    throw ValidationError("initial p must lie in [tau, 1]");
  }
}

double RelationController::frozen_p() const {
  if (!terminated_) {
    throw StateError("controller has not terminated; no frozen p yet");
  }
  return frozen_p_;
}

void RelationController::record_distance(double dbar) {
  if (!std::isfinite(dbar) || dbar < 0.0) {
    throw ValidationError("average distance must be finite and non-negative");
  }
  distances_.push_back(dbar);
}

double RelationController::apply_action() {
  if (terminated_) {
    throw StateError("apply_action called on a terminated controller");
  }
  if (distances_.size() < 2) {
    throw StateError("apply_action needs distances for this epoch and the previous one");
  }
  const double current = distances_[distances_.size() - 1];
  const double previous = distances_[distances_.size() - 2];
  double f;
  if (current < previous) {
    f = tau_;  // reward
    p_ = std::min(p_ + tau_, 1.0);
  } else {
    f = -tau_;  // penalty; ties count as no improvement
    p_ = std::max(p_ - tau_, p_min_);
  }
  actions_.push_back(f);
  return f;
}

bool RelationController::check_termination(int epoch, int total_epochs) {
  if (terminated_) return true;
  bool fire = epoch == total_epochs;
  if (!fire && epoch >= 10) {
    double sum = 0.0;
    const std::size_t window = std::min<std::size_t>(10, actions_.size());
    for (std::size_t i = actions_.size() - window; i < actions_.size(); ++i) {
      sum += actions_[i];
    }
    fire = std::abs(sum) <= 2.0 * tau_;
  }
  if (fire) {
    terminated_ = true;
    frozen_p_ = p_;
  }
  return fire;
}

double average_distance(const MultiRelationGraph& g,
                        const std::function<std::span<const NodeId>(NodeId)>& filtered,
                        const std::function<double(NodeId, NodeId)>& dist) {
  const std::int64_t n_train = g.count_in(Split::train);
  if (n_train == 0) {
    throw ValidationError("average_distance: train mask is empty");
  }
  double total = 0.0;
  for (Eigen::Index v = 0; v < g.num_nodes(); ++v) {
    const auto sv = static_cast<std::size_t>(v);
    if (g.labels[sv] != 1 || g.split[sv] != Split::train) continue;
    const auto kept = filtered(static_cast<NodeId>(v));
    if (kept.empty()) continue;  // empty kept set contributes 0
    double node_sum = 0.0;
    for (const NodeId u : kept) node_sum += dist(static_cast<NodeId>(v), u);
    total += node_sum / static_cast<double>(kept.size());
  }
  return total / static_cast<double>(n_train);
}

double average_distance(const MultiRelationGraph& g, const RelationScorer& scorer,
                        const Mat& inputs,
                        const std::vector<std::vector<NodeId>>& ranked_by_node,
                        double p, bool keep_all) {
  return average_distance(
      g,
      [&](NodeId v) -> std::span<const NodeId> {
        const auto& ranked = ranked_by_node[static_cast<std::size_t>(v)];
        const std::size_t k = keep_all ? ranked.size() : keep_count(p, ranked.size());
        return {ranked.data(), k};
      },
      [&](NodeId v, NodeId u) { return score_distance(scorer, inputs, v, u); });
}

}  // namespace ergnn
