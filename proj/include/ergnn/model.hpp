#pragma once

#include <span>
#include <string>
#include <vector>

#include "ergnn/graph.hpp"
#include "ergnn/rng.hpp"
#include "ergnn/similarity.hpp"
#include "ergnn/types.hpp"

namespace ergnn {

/// Which aggregation mechanisms are active. The ablations disable exactly
/// one mechanism each and leave everything else untouched.
enum class AggregationMode {
  full,         // filter by p, central weight p
  no_filter,    // keep all neighbors, central weight still tracks p
  no_enhancer,  // filter by p, plain mean over {self} + kept neighbors
};

std::string to_string(AggregationMode m);
AggregationMode aggregation_mode_from_string(const std::string& s);

/// Inter-relation weights of one layer: W is d_out x (d_in * (R + 1)), the
/// column blocks being [self | relation 0 | ... | relation R-1].
struct LayerParams {
  Parameter W;
  Parameter bias;  // 1 x d_out

  LayerParams() = default;
  LayerParams(Eigen::Index d_out, Eigen::Index d_in, int num_relations)
      : W(d_out, d_in * (num_relations + 1)), bias(1, d_out) {}
};

/// The full network: L aggregation layers, per-(layer, relation) similarity
/// scorers, and a linear classifier head on the final embedding.
struct Model {
  int num_layers = 1;
  int num_relations = 1;
  Eigen::Index feature_dim = 2;
  Eigen::Index embed_dim = 16;
  AggregationMode mode = AggregationMode::full;

  std::vector<LayerParams> layers;                   // [l]
  std::vector<std::vector<RelationScorer>> scorers;  // [l][r]
  Parameter head_weight;                             // 1 x embed_dim
  Parameter head_bias;                               // 1 x 1

  Model() = default;
  Model(int layers_count, int relations, Eigen::Index d_in, Eigen::Index d_out,
        AggregationMode mode);

  Eigen::Index layer_input_dim(int layer) const {
    return layer == 0 ? feature_dim : embed_dim;
  }

  /// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) for W and the head; scorers
  /// and biases start at zero so the first-epoch filtering is the
  /// deterministic id-order tie-break.
  void init_params(Rng& rng);

  /// Every trainable parameter in a fixed order (layer weights, scorers,
  /// head); drives the optimizer, zero_grad and gradient checks.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  void zero_grad();
};

/// Neighbor orderings frozen for one epoch: ranked[l][r][v] lists v's
/// relation-r neighbors by ascending (distance, id) under the scorer inputs
/// of layer l. The kept set for any p is a prefix. layer_inputs[l] holds the
/// embeddings the layer-(l+1) scorers saw (layer_inputs[0] = raw features).
struct SelectionTable {
  std::vector<std::vector<std::vector<std::vector<NodeId>>>> ranked;
  std::vector<Mat> layer_inputs;
};

/// Builds the table with the model's current parameters and the given
/// per-(layer, relation) p values.
SelectionTable build_selection_table(const MultiRelationGraph& g, const Model& model,
                                     const std::vector<std::vector<double>>& p);

/// h_{v,r} = p * h_v + (1 - p) * mean over the kept neighbors, or h_v when
/// nothing is kept. The standalone form ranks and filters on the fly.
RowVec intra_relation_aggregate(const MultiRelationGraph& g, const RelationScorer& scorer,
                                double p, NodeId v, int r, const Mat& prev_embeddings,
                                AggregationMode mode = AggregationMode::full);

/// ReLU(W * concat(h_prev, h_{v,1}, ..., h_{v,R}) + bias).
RowVec inter_relation_aggregate(const LayerParams& layer, const RowVec& h_prev,
                                const std::vector<RowVec>& per_relation_rows);

/// Everything backward needs: per layer, the frontier of nodes whose
/// embeddings were computed, their kept neighbor sets, concatenated inputs
/// and pre-activations.
struct ForwardCache {
  std::vector<std::vector<NodeId>> frontier;    // [l], l = 0..L; frontier[L] = batch
  std::vector<std::vector<Eigen::Index>> row_of;  // [l] node id -> row, -1 if absent
  std::vector<Mat> h;                           // [l] embeddings per frontier row
  std::vector<Mat> concat;                      // [l-1 -> layer l] concatenated inputs
  std::vector<Mat> pre;                         // pre-ReLU activations per layer
  // kept[l][r][row]: neighbor ids aggregated for frontier[l+1][row]
  std::vector<std::vector<std::vector<std::vector<NodeId>>>> kept;
  std::vector<std::vector<double>> p_used;      // [l][r]
};

/// Runs the layered pipeline over the batch's L-hop frontier and returns the
/// final-layer embeddings (one row per batch node). Discrete neighbor
/// selection comes from the table and is not part of the gradient.
Mat forward(const MultiRelationGraph& g, const Model& model, const SelectionTable& table,
            const std::vector<std::vector<double>>& p, std::span<const NodeId> batch,
            ForwardCache* cache = nullptr);

/// Backpropagates dL/dh^(L) through every aggregation layer, accumulating
/// into the layer parameters. Scorer gradients come from similarity_loss,
/// not from here.
void backward(const MultiRelationGraph& g, Model& model, const ForwardCache& cache,
              const Mat& grad_out);

}  // namespace ergnn
