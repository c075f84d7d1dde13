#pragma once

#include <span>

#include "ergnn/types.hpp"

namespace ergnn {

/// Thresholded confusion counts plus rank-based AUC. When only one class is
/// present AUC is NaN (undefined); everything else is still computed.
struct Metrics {
  double f1 = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double accuracy = 0.0;
  double auc = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;
};

/// Predicted positive means probability >= threshold. AUC uses the rank-sum
/// formulation with average ranks, so ties contribute 1/2.
Metrics compute_metrics(std::span<const double> probabilities, std::span<const int> labels,
                        double threshold = 0.5);

}  // namespace ergnn
