#include "ergnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace ergnn {

Metrics compute_metrics(std::span<const double> probabilities, std::span<const int> labels,
                        double threshold) {
  if (probabilities.empty()) {
    throw ValidationError("compute_metrics: empty input");
  }
  if (probabilities.size() != labels.size()) {
    throw DimensionError("compute_metrics: " + std::to_string(probabilities.size()) +
                         " probabilities vs " + std::to_string(labels.size()) + " labels");
  }
  Metrics m;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw ValidationError("compute_metrics: label must be 0 or 1");
    }
    const bool predicted = probabilities[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++m.tp : ++m.fn;
    } else {
      predicted ? ++m.fp : ++m.tn;
    }
  }
  const auto total = static_cast<double>(probabilities.size());
  m.precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
  m.recall = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.accuracy = static_cast<double>(m.tp + m.tn) / total;

  const long n_pos = m.tp + m.fn;
  const long n_neg = m.fp + m.tn;
  if (n_pos == 0 || n_neg == 0) {
    m.auc = std::numeric_limits<double>::quiet_NaN();
    return m;
  }

  // average-rank Mann-Whitney statistic
  std::vector<std::size_t> order(probabilities.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probabilities[a] < probabilities[b];
  });
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           probabilities[order[j + 1]] == probabilities[order[i]]) {
      ++j;
    }
    const double avg_rank = static_cast<double>(i + 1 + j + 1) / 2.0;  // ranks are 1-based
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
    }
    i = j + 1;
  }
  m.auc = (pos_rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0) /
          (static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return m;
}

}  // namespace ergnn
