#include "ergnn/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "ergnn/hash.hpp"
#include "ergnn/json_io.hpp"
#include "ergnn/nn.hpp"
#include "ergnn/rng.hpp"

namespace ergnn {

namespace {

std::string hex_u64(std::uint64_t v) {
  static const char* k = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = k[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::vector<std::vector<double>> controller_p(
    const std::vector<std::vector<RelationController>>& controllers) {
  std::vector<std::vector<double>> p;
  for (const auto& layer : controllers) {
    std::vector<double> row;
    for (const auto& c : layer) row.push_back(c.p());
    p.push_back(std::move(row));
  }
  return p;
}

std::vector<double> proba_with(const MultiRelationGraph& g, const Model& model,
                               const SelectionTable& table,
                               const std::vector<std::vector<double>>& p,
                               std::span<const NodeId> nodes) {
  const Mat h = forward(g, model, table, p, nodes);
  const Mat probs = classify(model.head_weight, model.head_bias, h);
  std::vector<double> out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = probs(static_cast<Eigen::Index>(i), 0);
  return out;
}

nlohmann::json synthetic_to_json(const SyntheticConfig& s) {
  nlohmann::json j;
  j["n_benign"] = s.n_benign;
  j["n_fraud"] = s.n_fraud;
  j["feature_dim"] = s.feature_dim;
  j["benign_mean"] = s.benign_mean;
  j["fraud_mean"] = s.fraud_mean;
  j["camouflage_ratio"] = s.camouflage_ratio;
  j["avg_degree"] = s.avg_degree;
  j["num_relations"] = s.num_relations;
  j["seed"] = s.seed;
  j["train_frac"] = s.train_frac;
  j["val_frac"] = s.val_frac;
  return j;
}

SyntheticConfig synthetic_from_json(const nlohmann::json& j) {
  SyntheticConfig s;
  s.n_benign = j.at("n_benign").get<int>();
  s.n_fraud = j.at("n_fraud").get<int>();
  s.feature_dim = j.at("feature_dim").get<int>();
  s.benign_mean = j.at("benign_mean").get<std::vector<double>>();
  s.fraud_mean = j.at("fraud_mean").get<std::vector<double>>();
  s.camouflage_ratio = j.at("camouflage_ratio").get<double>();
  s.avg_degree = j.at("avg_degree").get<double>();
  s.num_relations = j.at("num_relations").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train_frac = j.at("train_frac").get<double>();
  s.val_frac = j.at("val_frac").get<double>();
  return s;
}

nlohmann::json config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["epochs"] = c.epochs;
  j["layers"] = c.layers;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["lambda"] = c.lambda;
  j["tau"] = c.tau;
  j["seed"] = c.seed;
  j["d_out"] = c.d_out;
  j["mode"] = to_string(c.mode);
  j["dataset"] = c.dataset_dir;
  j["synthetic"] = synthetic_to_json(c.synthetic);
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.layers = j.at("layers").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lambda = j.at("lambda").get<double>();
  c.tau = j.at("tau").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.d_out = j.at("d_out").get<int>();
  c.mode = aggregation_mode_from_string(j.at("mode").get<std::string>());
  c.dataset_dir = j.at("dataset").get<std::string>();
  c.synthetic = synthetic_from_json(j.at("synthetic"));
  return c;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (layers < 1) throw ValidationError("layers must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
  if (!(tau > 0.0) || tau >= 0.5) throw ValidationError("tau must lie in (0, 0.5)");
  if (d_out < 1) throw ValidationError("d_out must be >= 1");
  if (dataset_dir.empty()) synthetic.validate();
}

DatasetInfo dataset_info(const MultiRelationGraph& g) {
  DatasetInfo info;
  info.num_nodes = g.num_nodes();
  info.num_relations = g.num_relations();
  info.feature_dim = g.feature_dim();
  for (const Relation& rel : g.relations) {
    info.directed_edge_counts.push_back(static_cast<std::int64_t>(rel.neighbors.size()));
  }
  info.hash_hex = hex_u64(g.fingerprint());
  return info;
}

Mat classify(const Parameter& head_weight, const Parameter& head_bias, const Mat& embeddings) {
  return nn::sigmoid(nn::linear_forward(head_weight, head_bias, embeddings));
}

LossParts total_loss(const MultiRelationGraph& g, Model& model, const SelectionTable& table,
                     const std::vector<std::vector<double>>& p, std::span<const NodeId> batch,
                     double lambda) {
  if (batch.empty()) {
    throw ValidationError("total_loss: batch must be nonempty");
  }
  model.zero_grad();

  ForwardCache cache;
  const Mat h = forward(g, model, table, p, batch, &cache);
  const Mat logits = nn::linear_forward(model.head_weight, model.head_bias, h);
  const Mat probs = nn::sigmoid(logits);
  Mat y(static_cast<Eigen::Index>(batch.size()), 1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y(static_cast<Eigen::Index>(i), 0) =
        static_cast<double>(g.labels[static_cast<std::size_t>(batch[i])]);
  }

  LossParts parts;
  parts.gnn = nn::bce_loss(probs, y);
  for (int l = 0; l < model.num_layers; ++l) {
    parts.sim += similarity_loss(model.scorers[static_cast<std::size_t>(l)],
                                 table.layer_inputs[static_cast<std::size_t>(l)], g, batch);
  }
  parts.total = parts.gnn + lambda * parts.sim;

  const Mat dlogits = nn::bce_logit_grad(probs, y);
  const Mat dh = nn::linear_backward(model.head_weight, model.head_bias, h, dlogits);
  backward(g, model, cache, dh);
  if (lambda != 1.0) {
    for (auto& layer_scorers : model.scorers) {
      for (RelationScorer& s : layer_scorers) {
        s.weight.grad *= lambda;
        s.bias.grad *= lambda;
      }
    }
  }
  return parts;
}

TrainResult train(const TrainConfig& config, const MultiRelationGraph& g,
                  const std::function<void(const EpochReport&)>& on_epoch) {
  config.validate();
  const int L = config.layers;
  const int R = g.num_relations();

  Rng rng(config.seed);
  Model model(L, R, g.feature_dim(), config.d_out, config.mode);
  model.init_params(rng);

  std::vector<std::vector<RelationController>> controllers;
  for (int l = 0; l < L; ++l) {
    std::vector<RelationController> layer;
    for (int r = 0; r < R; ++r) layer.emplace_back(0.5, config.tau);
    controllers.push_back(std::move(layer));
  }

  auto params = model.parameters();
  std::vector<AdamState> states;
  states.reserve(params.size());
  for (const Parameter* p : params) states.emplace_back(*p);

  std::vector<NodeId> train_nodes = g.nodes_in(Split::train);
  const std::vector<NodeId> val_nodes = g.nodes_in(Split::val);
  if (train_nodes.empty()) {
    throw ValidationError("train: train mask is empty");
  }

  auto p = controller_p(controllers);
  SelectionTable table = build_selection_table(g, model, p);
  std::vector<EpochReport> reports;
  reports.reserve(static_cast<std::size_t>(config.epochs));

  for (int e = 1; e <= config.epochs; ++e) {
    rng.shuffle(train_nodes);
    EpochReport rep;
    rep.epoch = e;
    const auto bs = static_cast<std::size_t>(config.batch_size);
    for (std::size_t start = 0; start < train_nodes.size(); start += bs) {
      const std::size_t len = std::min(bs, train_nodes.size() - start);
      const std::span<const NodeId> batch(train_nodes.data() + start, len);
      const LossParts parts = total_loss(g, model, table, p, batch, config.lambda);
      for (std::size_t i = 0; i < params.size(); ++i) {
        nn::adam_step(*params[i], states[i], config.learning_rate);
      }
      rep.loss_gnn += parts.gnn;
      rep.loss_sim += parts.sim;
      rep.loss_total += parts.total;
    }

    // RL bookkeeping on the post-update state; these selections also drive
    // the next epoch's batches
    table = build_selection_table(g, model, p);
    rep.dbar.assign(static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(R), 0.0));
    for (int l = 0; l < L; ++l) {
      for (int r = 0; r < R; ++r) {
        const double dbar = average_distance(
            g, model.scorers[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)],
            table.layer_inputs[static_cast<std::size_t>(l)],
            table.ranked[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)],
            p[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)],
            config.mode == AggregationMode::no_filter);
        controllers[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)].record_distance(dbar);
        rep.dbar[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)] = dbar;
      }
    }
    rep.terminated.assign(static_cast<std::size_t>(L), std::vector<bool>(static_cast<std::size_t>(R), false));
    for (int l = 0; l < L; ++l) {
      for (int r = 0; r < R; ++r) {
        auto& c = controllers[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)];
        if (!c.terminated() && e >= 2) c.apply_action();
        c.check_termination(e, config.epochs);
        rep.terminated[static_cast<std::size_t>(l)][static_cast<std::size_t>(r)] = c.terminated();
      }
    }
    p = controller_p(controllers);
    rep.p = p;

    if (!val_nodes.empty()) {
      const auto probs = proba_with(g, model, table, p, val_nodes);
      std::vector<int> labels(val_nodes.size());
      for (std::size_t i = 0; i < val_nodes.size(); ++i) {
        labels[i] = g.labels[static_cast<std::size_t>(val_nodes[i])];
      }
      rep.val = compute_metrics(probs, labels);
      rep.val_present = true;
    }

    if (on_epoch) on_epoch(rep);
    reports.push_back(std::move(rep));
  }

  TrainResult result;
  result.trained.model = std::move(model);
  result.trained.frozen_p = p;
  result.trained.config = config;
  result.trained.dataset = dataset_info(g);
  result.reports = std::move(reports);
  return result;
}

std::vector<double> predict_proba(const TrainedModel& trained, const MultiRelationGraph& g,
                                  std::span<const NodeId> nodes) {
  if (g.feature_dim() != trained.model.feature_dim) {
    throw DimensionError("checkpoint expects feature_dim " +
                         std::to_string(trained.model.feature_dim) + ", dataset has " +
                         std::to_string(g.feature_dim()));
  }
  if (g.num_relations() != trained.model.num_relations) {
    throw DimensionError("checkpoint expects " + std::to_string(trained.model.num_relations) +
                         " relations, dataset has " + std::to_string(g.num_relations()));
  }
  const SelectionTable table = build_selection_table(g, trained.model, trained.frozen_p);
  return proba_with(g, trained.model, table, trained.frozen_p, nodes);
}

std::vector<int> hard_labels(std::span<const double> probabilities) {
  std::vector<int> out(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    out[i] = probabilities[i] >= 0.5 ? 1 : 0;
  }
  return out;
}

Metrics evaluate(const TrainedModel& trained, const MultiRelationGraph& g, Split split) {
  const auto nodes = g.nodes_in(split);
  if (nodes.empty()) {
    throw ValidationError(std::string("evaluate: no nodes in split '") + to_string(split) + "'");
  }
  const auto probs = predict_proba(trained, g, nodes);
  std::vector<int> labels(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    labels[i] = g.labels[static_cast<std::size_t>(nodes[i])];
  }
  return compute_metrics(probs, labels);
}

void save_checkpoint(const TrainedModel& trained, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "ergnn-checkpoint-v1";
  j["config"] = config_to_json(trained.config);
  nlohmann::json ds;
  ds["num_nodes"] = trained.dataset.num_nodes;
  ds["num_relations"] = trained.dataset.num_relations;
  ds["feature_dim"] = trained.dataset.feature_dim;
  ds["directed_edge_counts"] = trained.dataset.directed_edge_counts;
  ds["hash"] = trained.dataset.hash_hex;
  j["dataset"] = ds;
  j["frozen_p"] = trained.frozen_p;

  nlohmann::json params;
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerParams& layer : trained.model.layers) {
    nlohmann::json lj;
    lj["w"] = mat_to_json(layer.W.value);
    lj["bias"] = mat_to_json(layer.bias.value);
    layers.push_back(lj);
  }
  params["layers"] = layers;
  nlohmann::json scorers = nlohmann::json::array();
  for (const auto& layer_scorers : trained.model.scorers) {
    nlohmann::json row = nlohmann::json::array();
    for (const RelationScorer& s : layer_scorers) {
      nlohmann::json sj;
      sj["weight"] = mat_to_json(s.weight.value);
      sj["bias"] = mat_to_json(s.bias.value);
      row.push_back(sj);
    }
    scorers.push_back(row);
  }
  params["scorers"] = scorers;
  params["head_weight"] = mat_to_json(trained.model.head_weight.value);
  params["head_bias"] = mat_to_json(trained.model.head_bias.value);
  j["parameters"] = params;

  write_text_file(path, j.dump(2) + "\n");
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "ergnn-checkpoint-v1") {
      throw ValidationError(path.string() + ": unknown checkpoint format");
    }
    TrainedModel trained;
    trained.config = config_from_json(j.at("config"));
    const auto& ds = j.at("dataset");
    trained.dataset.num_nodes = ds.at("num_nodes").get<std::int64_t>();
    trained.dataset.num_relations = ds.at("num_relations").get<int>();
    trained.dataset.feature_dim = ds.at("feature_dim").get<std::int64_t>();
    trained.dataset.directed_edge_counts = ds.at("directed_edge_counts").get<std::vector<std::int64_t>>();
    trained.dataset.hash_hex = ds.at("hash").get<std::string>();

    trained.model = Model(trained.config.layers, trained.dataset.num_relations,
                          trained.dataset.feature_dim, trained.config.d_out, trained.config.mode);
    Model& m = trained.model;
    const auto& params = j.at("parameters");
    const auto& layers = params.at("layers");
    if (layers.size() != m.layers.size()) {
      throw DimensionError(path.string() + ": checkpoint has " + std::to_string(layers.size()) +
                           " layers, config expects " + std::to_string(m.layers.size()));
    }
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      m.layers[l].W.value = mat_from_json(layers[l].at("w"), m.layers[l].W.rows(),
                                          m.layers[l].W.cols(), "layer weight");
      m.layers[l].bias.value = mat_from_json(layers[l].at("bias"), 1, m.embed_dim, "layer bias");
    }
    const auto& scorers = params.at("scorers");
    if (scorers.size() != m.scorers.size()) {
      throw DimensionError(path.string() + ": scorer layer count mismatch");
    }
    for (std::size_t l = 0; l < m.scorers.size(); ++l) {
      if (scorers[l].size() != m.scorers[l].size()) {
        throw DimensionError(path.string() + ": scorer relation count mismatch");
      }
      for (std::size_t r = 0; r < m.scorers[l].size(); ++r) {
        m.scorers[l][r].weight.value = mat_from_json(
            scorers[l][r].at("weight"), 1, m.scorers[l][r].input_dim(), "scorer weight");
        m.scorers[l][r].bias.value = mat_from_json(scorers[l][r].at("bias"), 1, 1, "scorer bias");
      }
    }
    m.head_weight.value = mat_from_json(params.at("head_weight"), 1, m.embed_dim, "head weight");
    m.head_bias.value = mat_from_json(params.at("head_bias"), 1, 1, "head bias");

    trained.frozen_p = j.at("frozen_p").get<std::vector<std::vector<double>>>();
    if (trained.frozen_p.size() != static_cast<std::size_t>(m.num_layers)) {
      throw DimensionError(path.string() + ": frozen_p layer count mismatch");
    }
    for (const auto& row : trained.frozen_p) {
      if (row.size() != static_cast<std::size_t>(m.num_relations)) {
        throw DimensionError(path.string() + ": frozen_p relation count mismatch");
      }
    }
    return trained;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_train_report(const std::vector<EpochReport>& reports,
                       const std::filesystem::path& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const EpochReport& rep : reports) {
    nlohmann::json j;
    j["epoch"] = rep.epoch;
    j["loss_gnn"] = rep.loss_gnn;
    j["loss_sim"] = rep.loss_sim;
    j["loss_total"] = rep.loss_total;
    j["p"] = rep.p;
    j["dbar"] = rep.dbar;
    j["terminated"] = rep.terminated;
    j["val"] = rep.val_present ? metrics_to_json(rep.val) : nlohmann::json();
    arr.push_back(j);
  }
  write_text_file(path, arr.dump(2) + "\n");
}

}  // namespace ergnn
