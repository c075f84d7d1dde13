#include "ergnn/model.hpp"

#include <algorithm>
#include <cmath>

#include "ergnn/nn.hpp"

namespace ergnn {

namespace {

struct AggWeights {
  double center;
  double neighbor;
};

AggWeights agg_weights(AggregationMode mode, double p, std::size_t kept) {
  if (kept == 0) return {1.0, 0.0};
  if (mode == AggregationMode::no_enhancer) {
    const double w = 1.0 / static_cast<double>(kept + 1);
    return {w, w};
  }
  return {p, (1.0 - p) / static_cast<double>(kept)};
}

std::span<const NodeId> kept_prefix(const std::vector<NodeId>& ranked, AggregationMode mode,
                                    double p) {
  const std::size_t k =
      mode == AggregationMode::no_filter ? ranked.size() : keep_count(p, ranked.size());
  return {ranked.data(), k};
}

void check_p_shape(const Model& model, const std::vector<std::vector<double>>& p) {
  if (p.size() != static_cast<std::size_t>(model.num_layers)) {
    throw DimensionError("p values must cover every layer");
  }
  for (const auto& row : p) {
    if (row.size() != static_cast<std::size_t>(model.num_relations)) {
      throw DimensionError("p values must cover every relation");
    }
  }
}

}  // namespace

std::string to_string(AggregationMode m) {
  switch (m) {
    case AggregationMode::full: return "full";
    case AggregationMode::no_filter: return "no_filter";
    case AggregationMode::no_enhancer: return "no_enhancer";
  }
  return "?";
}

AggregationMode aggregation_mode_from_string(const std::string& s) {
  if (s == "full") return AggregationMode::full;
  if (s == "no_filter") return AggregationMode::no_filter;
  if (s == "no_enhancer") return AggregationMode::no_enhancer;
  throw ValidationError("unknown aggregation mode '" + s + "'");
}

Model::Model(int layers_count, int relations, Eigen::Index d_in, Eigen::Index d_out,
             AggregationMode mode)
    : num_layers(layers_count),
      num_relations(relations),
      feature_dim(d_in),
      embed_dim(d_out),
      mode(mode) {
  if (layers_count < 1 || relations < 1 || d_in < 1 || d_out < 1) {
    throw ValidationError("model dimensions must be positive");
  }
  for (int l = 0; l < layers_count; ++l) {
    const Eigen::Index input = layer_input_dim(l);
    layers.emplace_back(d_out, input, relations);
    std::vector<RelationScorer> layer_scorers;
    for (int r = 0; r < relations; ++r) layer_scorers.emplace_back(input);
    scorers.push_back(std::move(layer_scorers));
  }
  head_weight = Parameter(1, d_out);
  head_bias = Parameter(1, 1);
}

void Model::init_params(Rng& rng) {
  for (LayerParams& layer : layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.W.cols()));
    for (Eigen::Index i = 0; i < layer.W.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.W.cols(); ++j) {
        layer.W.value(i, j) = rng.uniform(-bound, bound);
      }
    }
    layer.bias.value.setZero();
  }
  const double head_bound = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  for (Eigen::Index j = 0; j < embed_dim; ++j) {
    head_weight.value(0, j) = rng.uniform(-head_bound, head_bound);
  }
  head_bias.value.setZero();
  // scorers stay at zero: every score is 0.5, every distance 0, so the
  // first-epoch filtering falls back to the id-order tie-break
  for (auto& layer_scorers : scorers) {
    for (RelationScorer& s : layer_scorers) {
      s.weight.value.setZero();
      s.bias.value.setZero();
    }
  }
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (LayerParams& layer : layers) {
    out.push_back(&layer.W);
    out.push_back(&layer.bias);
  }
  for (auto& layer_scorers : scorers) {
    for (RelationScorer& s : layer_scorers) {
      out.push_back(&s.weight);
      out.push_back(&s.bias);
    }
  }
  out.push_back(&head_weight);
  out.push_back(&head_bias);
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out;
  for (const Parameter* p : const_cast<Model*>(this)->parameters()) out.push_back(p);
  return out;
}

void Model::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

SelectionTable build_selection_table(const MultiRelationGraph& g, const Model& model,
                                     const std::vector<std::vector<double>>& p) {
  check_p_shape(model, p);
  const auto n = static_cast<std::size_t>(g.num_nodes());
  SelectionTable table;
  table.layer_inputs.push_back(g.features);
  table.ranked.resize(static_cast<std::size_t>(model.num_layers));
  for (int l = 0; l < model.num_layers; ++l) {
    const Mat& X = table.layer_inputs.back();
    auto& by_relation = table.ranked[static_cast<std::size_t>(l)];
    by_relation.resize(static_cast<std::size_t>(model.num_relations));
    for (int r = 0; r < model.num_relations; ++r) {
      auto& by_node = by_relation[static_cast<std::size_t>(r)];
      by_node.resize(n);
      const RelationScorer& scorer = model.scorers[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)];
      for (std::size_t v = 0; v < n; ++v) {
        by_node[v] = rank_neighbors(scorer, X, static_cast<NodeId>(v),
                                    g.neighbors(static_cast<NodeId>(v), r));
      }
    }
    if (l + 1 < model.num_layers) {
      // next layer's scorers see this layer's output for every node
      const LayerParams& layer = model.layers[static_cast<std::size_t>(l)];
      const Eigen::Index d_prev = X.cols();
      Mat concat(static_cast<Eigen::Index>(n), d_prev * (model.num_relations + 1));
      for (std::size_t v = 0; v < n; ++v) {
        const auto vi = static_cast<Eigen::Index>(v);
        concat.block(vi, 0, 1, d_prev) = X.row(vi);
        for (int r = 0; r < model.num_relations; ++r) {
          const auto kept = kept_prefix(by_relation[static_cast<std::size_t>(r)][v], model.mode,
                                        p[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)]);
          const auto w = agg_weights(model.mode,
                                     p[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)],
                                     kept.size());
          RowVec acc = w.center * X.row(vi);
          for (const NodeId u : kept) acc += w.neighbor * X.row(u);
          concat.block(vi, d_prev * (r + 1), 1, d_prev) = acc;
        }
      }
      table.layer_inputs.push_back(nn::relu(nn::linear_forward(layer.W, layer.bias, concat)));
    }
  }
  return table;
}

RowVec intra_relation_aggregate(const MultiRelationGraph& g, const RelationScorer& scorer,
                                double p, NodeId v, int r, const Mat& prev_embeddings,
                                AggregationMode mode) {
  const auto ranked = rank_neighbors(scorer, prev_embeddings, v, g.neighbors(v, r));
  const auto kept = kept_prefix(ranked, mode, p);
  const auto w = agg_weights(mode, p, kept.size());
  RowVec out = w.center * prev_embeddings.row(v);
  for (const NodeId u : kept) out += w.neighbor * prev_embeddings.row(u);
  return out;
}

RowVec inter_relation_aggregate(const LayerParams& layer, const RowVec& h_prev,
                                const std::vector<RowVec>& per_relation_rows) {
  const Eigen::Index d_in = h_prev.cols();
  const auto slots = static_cast<Eigen::Index>(per_relation_rows.size()) + 1;
  if (layer.W.cols() != d_in * slots) {
    throw DimensionError("inter_relation_aggregate: weight expects " +
                         std::to_string(layer.W.cols() / d_in - 1) + " relations, got " +
                         std::to_string(per_relation_rows.size()));
  }
  Mat concat(1, d_in * slots);
  concat.block(0, 0, 1, d_in) = h_prev;
  for (std::size_t r = 0; r < per_relation_rows.size(); ++r) {
    if (per_relation_rows[r].cols() != d_in) {
      throw DimensionError("inter_relation_aggregate: relation row " + std::to_string(r) +
                           " has width " + std::to_string(per_relation_rows[r].cols()) +
                           ", expected " + std::to_string(d_in));
    }
    concat.block(0, d_in * static_cast<Eigen::Index>(r + 1), 1, d_in) = per_relation_rows[r];
  }
  return nn::relu(nn::linear_forward(layer.W, layer.bias, concat)).row(0);
}

Mat forward(const MultiRelationGraph& g, const Model& model, const SelectionTable& table,
            const std::vector<std::vector<double>>& p, std::span<const NodeId> batch,
            ForwardCache* cache) {
  check_p_shape(model, p);
  if (batch.empty()) {
    throw ValidationError("forward: batch must be nonempty");
  }
  const auto n = g.num_nodes();
  for (const NodeId v : batch) {
    if (v < 0 || v >= n) {
      throw std::out_of_range("forward: batch node " + std::to_string(v) + " out of range [0, " +
                              std::to_string(n) + ")");
    }
  }
  const int L = model.num_layers;

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c = ForwardCache{};
  c.frontier.resize(static_cast<std::size_t>(L) + 1);
  c.row_of.resize(static_cast<std::size_t>(L) + 1);
  c.h.resize(static_cast<std::size_t>(L) + 1);
  c.concat.resize(static_cast<std::size_t>(L));
  c.pre.resize(static_cast<std::size_t>(L));
  c.kept.resize(static_cast<std::size_t>(L));
  c.p_used = p;

  c.frontier[static_cast<std::size_t>(L)].assign(batch.begin(), batch.end());
  for (int l = L; l >= 1; --l) {
    std::vector<NodeId> prev = c.frontier[static_cast<std::size_t>(l)];
    for (const NodeId v : c.frontier[static_cast<std::size_t>(l)]) {
      for (int r = 0; r < model.num_relations; ++r) {
        const auto nbrs = g.neighbors(v, r);
        prev.insert(prev.end(), nbrs.begin(), nbrs.end());
      }
    }
    std::sort(prev.begin(), prev.end());
    prev.erase(std::unique(prev.begin(), prev.end()), prev.end());
    c.frontier[static_cast<std::size_t>(l - 1)] = std::move(prev);
  }
  for (int l = 0; l <= L; ++l) {
    auto& rows = c.row_of[static_cast<std::size_t>(l)];
    rows.assign(static_cast<std::size_t>(n), -1);
    const auto& f = c.frontier[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i < f.size(); ++i) {
      rows[static_cast<std::size_t>(f[i])] = static_cast<Eigen::Index>(i);
    }
  }

  const auto& base = c.frontier[0];
  c.h[0] = Mat(static_cast<Eigen::Index>(base.size()), model.feature_dim);
  for (std::size_t i = 0; i < base.size(); ++i) {
    c.h[0].row(static_cast<Eigen::Index>(i)) = g.features.row(base[i]);
  }

  for (int l = 1; l <= L; ++l) {
    const auto li = static_cast<std::size_t>(l - 1);
    const LayerParams& layer = model.layers[li];
    const Eigen::Index d_prev = model.layer_input_dim(l - 1);
    const auto& nodes = c.frontier[static_cast<std::size_t>(l)];
    const auto& prev_rows = c.row_of[li];
    const Mat& h_prev = c.h[li];

    c.kept[li].assign(static_cast<std::size_t>(model.num_relations), {});
    for (auto& k : c.kept[li]) k.resize(nodes.size());

    Mat concat(static_cast<Eigen::Index>(nodes.size()), d_prev * (model.num_relations + 1));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const NodeId v = nodes[i];
      const auto row_i = static_cast<Eigen::Index>(i);
      const auto prev_row = h_prev.row(prev_rows[static_cast<std::size_t>(v)]);
      concat.block(row_i, 0, 1, d_prev) = prev_row;
      for (int r = 0; r < model.num_relations; ++r) {
        const auto& ranked = table.ranked[li][static_cast<std::size_t>(r)][static_cast<std::size_t>(v)];
        const auto kept = kept_prefix(ranked, model.mode, p[li][static_cast<std::size_t>(r)]);
        c.kept[li][static_cast<std::size_t>(r)][i].assign(kept.begin(), kept.end());
        const auto w = agg_weights(model.mode, p[li][static_cast<std::size_t>(r)], kept.size());
        RowVec acc = w.center * prev_row;
        for (const NodeId u : kept) {
          acc += w.neighbor * h_prev.row(prev_rows[static_cast<std::size_t>(u)]);
        }
        concat.block(row_i, d_prev * (r + 1), 1, d_prev) = acc;
      }
    }
    c.concat[li] = std::move(concat);
    c.pre[li] = nn::linear_forward(layer.W, layer.bias, c.concat[li]);
    c.h[static_cast<std::size_t>(l)] = nn::relu(c.pre[li]);
  }
  return c.h[static_cast<std::size_t>(L)];
}

void backward(const MultiRelationGraph& g, Model& model, const ForwardCache& cache,
              const Mat& grad_out) {
  (void)g;
  const int L = model.num_layers;
  if (grad_out.rows() != static_cast<Eigen::Index>(cache.frontier[static_cast<std::size_t>(L)].size())) {
    throw DimensionError("backward: gradient rows do not match the cached batch");
  }
  Mat dh = grad_out;
  for (int l = L; l >= 1; --l) {
    const auto li = static_cast<std::size_t>(l - 1);
    LayerParams& layer = model.layers[li];
    const Eigen::Index d_prev = model.layer_input_dim(l - 1);
    const Mat dz = nn::relu_backward(cache.pre[li], dh);
    const Mat dx = nn::linear_backward(layer.W, layer.bias, cache.concat[li], dz);

    const auto& nodes = cache.frontier[static_cast<std::size_t>(l)];
    const auto& prev_rows = cache.row_of[li];
    Mat dprev = Mat::Zero(static_cast<Eigen::Index>(cache.frontier[li].size()), d_prev);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto row_i = static_cast<Eigen::Index>(i);
      const auto center_row = prev_rows[static_cast<std::size_t>(nodes[i])];
      dprev.row(center_row) += dx.block(row_i, 0, 1, d_prev);
      for (int r = 0; r < model.num_relations; ++r) {
        const auto& kept = cache.kept[li][static_cast<std::size_t>(r)][i];
        const auto w = agg_weights(model.mode, cache.p_used[li][static_cast<std::size_t>(r)],
                                   kept.size());
        const auto slot = dx.block(row_i, d_prev * (r + 1), 1, d_prev);
        dprev.row(center_row) += w.center * slot;
        for (const NodeId u : kept) {
          dprev.row(prev_rows[static_cast<std::size_t>(u)]) += w.neighbor * slot;
        }
      }
    }
    dh = std::move(dprev);
  }
}

}  // namespace ergnn
