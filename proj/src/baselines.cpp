#include "ergnn/baselines.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "ergnn/json_io.hpp"
#include "ergnn/nn.hpp"
#include "ergnn/rng.hpp"

namespace ergnn {

namespace {

Mat union_adjacency(const MultiRelationGraph& g, bool self_loops) {
  const auto n = g.num_nodes();
  Mat a = Mat::Zero(n, n);
  for (const Relation& rel : g.relations) {
    for (Eigen::Index v = 0; v < n; ++v) {
      const auto sv = static_cast<std::size_t>(v);
      for (auto i = rel.offsets[sv]; i < rel.offsets[sv + 1]; ++i) {
        a(v, rel.neighbors[static_cast<std::size_t>(i)]) = 1.0;
      }
    }
  }
  if (self_loops) {
    for (Eigen::Index v = 0; v < n; ++v) a(v, v) = 1.0;
  }
  return a;
}

void uniform_init(Parameter& p, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.cols()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) p.value(i, j) = rng.uniform(-bound, bound);
  }
}

Mat train_labels_column(const MultiRelationGraph& g) {
  Mat y(g.num_nodes(), 1);
  for (Eigen::Index v = 0; v < g.num_nodes(); ++v) {
    y(v, 0) = static_cast<double>(g.labels[static_cast<std::size_t>(v)]);
  }
  return y;
}

Metrics metrics_on_split(const MultiRelationGraph& g, const Mat& probs, Split split) {
  std::vector<double> p;
  std::vector<int> y;
  for (Eigen::Index v = 0; v < g.num_nodes(); ++v) {
    if (g.split[static_cast<std::size_t>(v)] != split) continue;
    p.push_back(probs(v, 0));
    y.push_back(g.labels[static_cast<std::size_t>(v)]);
  }
  return compute_metrics(p, y);
}

/// Zeroes gradient rows outside the train mask, masking the loss to V_train.
Mat masked_logit_grad(const MultiRelationGraph& g, const Mat& probs, const Mat& y) {
  Mat dz = nn::bce_logit_grad(probs, y);
  for (Eigen::Index v = 0; v < g.num_nodes(); ++v) {
    if (g.split[static_cast<std::size_t>(v)] != Split::train) dz(v, 0) = 0.0;
  }
  return dz;
}

}  // namespace

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::gcn: return "gcn";
    case BaselineKind::mean_sage: return "mean_sage";
    case BaselineKind::ergnn_no_filter: return "ergnn_no_filter";
    case BaselineKind::ergnn_no_enhancer: return "ergnn_no_enhancer";
    case BaselineKind::ergnn_full: return "ergnn_full";
  }
  return "?";
}

BaselineKind baseline_kind_from_string(const std::string& s) {
  for (const BaselineKind k : all_baseline_kinds()) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown benchmark kind '" + s + "'");
}

std::vector<BaselineKind> all_baseline_kinds() {
  return {BaselineKind::gcn, BaselineKind::mean_sage, BaselineKind::ergnn_no_filter,
          BaselineKind::ergnn_no_enhancer, BaselineKind::ergnn_full};
}

Mat gcn_normalized_adjacency(const MultiRelationGraph& g) {
  Mat a = union_adjacency(g, /*self_loops=*/true);
  const auto n = a.rows();
  Eigen::VectorXd inv_sqrt_deg(n);
  for (Eigen::Index v = 0; v < n; ++v) {
    inv_sqrt_deg(v) = 1.0 / std::sqrt(a.row(v).sum());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) *= inv_sqrt_deg(i) * inv_sqrt_deg(j);
    }
  }
  return a;
}

Mat mean_neighbor_operator(const MultiRelationGraph& g) {
  Mat a = union_adjacency(g, /*self_loops=*/false);
  for (Eigen::Index v = 0; v < a.rows(); ++v) {
    const double deg = a.row(v).sum();
    if (deg > 0.0) a.row(v) /= deg;
  }
  return a;
}

Metrics run_gcn(const MultiRelationGraph& g, const TrainConfig& config) {
  const Mat norm_adj = gcn_normalized_adjacency(g);
  const Eigen::Index hidden = config.d_out;

  Rng rng(config.seed);
  Parameter w1(hidden, g.feature_dim()), b1(1, hidden);
  Parameter w2(1, hidden), b2(1, 1);
  uniform_init(w1, rng);
  uniform_init(w2, rng);
  std::vector<Parameter*> params{&w1, &b1, &w2, &b2};
  std::vector<AdamState> states;
  for (const Parameter* p : params) states.emplace_back(*p);

  const Mat y = train_labels_column(g);
  const Mat m1 = norm_adj * g.features;
  Mat probs;
  auto forward_pass = [&](Mat& z1_out, Mat& m2_out) {
    z1_out = nn::linear_forward(w1, b1, m1);
    m2_out = norm_adj * nn::relu(z1_out);
    return nn::sigmoid(nn::linear_forward(w2, b2, m2_out));
  };

  for (int e = 1; e <= config.epochs; ++e) {
    Mat z1, m2;
    probs = forward_pass(z1, m2);
    for (Parameter* p : params) p->zero_grad();
    const Mat dz = masked_logit_grad(g, probs, y);
    const Mat dm2 = nn::linear_backward(w2, b2, m2, dz);
    const Mat dh1 = norm_adj * dm2;  // the operator is symmetric
    const Mat dz1 = nn::relu_backward(z1, dh1);
    nn::linear_backward(w1, b1, m1, dz1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      nn::adam_step(*params[i], states[i], config.learning_rate);
    }
  }
  Mat z1, m2;
  probs = forward_pass(z1, m2);
  return metrics_on_split(g, probs, Split::test);
}

Metrics run_mean_sage(const MultiRelationGraph& g, const TrainConfig& config) {
  const Mat mean_op = mean_neighbor_operator(g);
  const Eigen::Index hidden = config.d_out;
  const Eigen::Index d = g.feature_dim();

  Rng rng(config.seed);
  Parameter w1(hidden, 2 * d), b1(1, hidden);
  Parameter w2(hidden, 2 * hidden), b2(1, hidden);
  Parameter wh(1, hidden), bh(1, 1);
  uniform_init(w1, rng);
  uniform_init(w2, rng);
  uniform_init(wh, rng);
  std::vector<Parameter*> params{&w1, &b1, &w2, &b2, &wh, &bh};
  std::vector<AdamState> states;
  for (const Parameter* p : params) states.emplace_back(*p);

  const auto n = g.num_nodes();
  const Mat y = train_labels_column(g);

  auto concat_with_mean = [&](const Mat& h) {
    Mat c(n, 2 * h.cols());
    c.block(0, 0, n, h.cols()) = h;
    c.block(0, h.cols(), n, h.cols()) = mean_op * h;
    return c;
  };

  Mat probs;
  Mat c1, z1, c2, z2;
  auto forward_pass = [&] {
    c1 = concat_with_mean(g.features);
    z1 = nn::linear_forward(w1, b1, c1);
    c2 = concat_with_mean(nn::relu(z1));
    z2 = nn::linear_forward(w2, b2, c2);
    return nn::sigmoid(nn::linear_forward(wh, bh, nn::relu(z2)));
  };

  for (int e = 1; e <= config.epochs; ++e) {
    probs = forward_pass();
    for (Parameter* p : params) p->zero_grad();
    const Mat dz = masked_logit_grad(g, probs, y);
    const Mat dh2 = nn::linear_backward(wh, bh, nn::relu(z2), dz);
    const Mat dz2 = nn::relu_backward(z2, dh2);
    const Mat dc2 = nn::linear_backward(w2, b2, c2, dz2);
    Mat dh1 = dc2.block(0, 0, n, hidden);
    dh1 += mean_op.transpose() * dc2.block(0, hidden, n, hidden);
    const Mat dz1 = nn::relu_backward(z1, dh1);
    nn::linear_backward(w1, b1, c1, dz1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      nn::adam_step(*params[i], states[i], config.learning_rate);
    }
  }
  probs = forward_pass();
  return metrics_on_split(g, probs, Split::test);
}

Metrics run_ergnn(const MultiRelationGraph& g, TrainConfig config, AggregationMode mode) {
  config.mode = mode;
  const TrainResult result = train(config, g);
  return evaluate(result.trained, g, Split::test);
}

std::vector<BenchRun> run_benchmark(const MultiRelationGraph& g, const TrainConfig& base,
                                    const std::vector<BaselineKind>& kinds,
                                    const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) {
    throw ValidationError("run_benchmark: at least one seed is required");
  }
  if (kinds.empty()) {
    throw ValidationError("run_benchmark: at least one kind is required");
  }
  std::vector<BenchRun> runs;
  for (const BaselineKind kind : kinds) {
    for (const std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.seed = seed;
      const auto start = std::chrono::steady_clock::now();
      BenchRun run;
      run.kind = kind;
      run.seed = seed;
      switch (kind) {
        case BaselineKind::gcn:
          run.test = run_gcn(g, cfg);
          break;
        case BaselineKind::mean_sage:
          run.test = run_mean_sage(g, cfg);
          break;
        case BaselineKind::ergnn_no_filter:
          run.test = run_ergnn(g, cfg, AggregationMode::no_filter);
          break;
        case BaselineKind::ergnn_no_enhancer:
          run.test = run_ergnn(g, cfg, AggregationMode::no_enhancer);
          break;
        case BaselineKind::ergnn_full:
          run.test = run_ergnn(g, cfg, AggregationMode::full);
          break;
      }
      run.wall_time_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      runs.push_back(run);
    }
  }
  return runs;
}

std::vector<BenchSummary> summarize_benchmark(const std::vector<BenchRun>& runs) {
  std::vector<BenchSummary> out;
  for (const BenchRun& run : runs) {
    BenchSummary* row = nullptr;
    for (BenchSummary& s : out) {
      if (s.kind == run.kind) row = &s;
    }
    if (!row) {
      out.push_back(BenchSummary{run.kind, 0, {}, {}, {}, {}, {}});
      row = &out.back();
    }
    row->runs += 1;
  }
  auto stats_for = [&](BaselineKind kind, auto metric_of) {
    double sum = 0.0;
    int n = 0;
    for (const BenchRun& run : runs) {
      if (run.kind != kind) continue;
      sum += metric_of(run.test);
      n += 1;
    }
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (const BenchRun& run : runs) {
      if (run.kind != kind) continue;
      const double d = metric_of(run.test) - mean;
      sq += d * d;
    }
    MetricStats s;
    s.mean = mean;
    s.stddev = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
    return s;
  };
  for (BenchSummary& row : out) {
    row.f1 = stats_for(row.kind, [](const Metrics& m) { return m.f1; });
    row.recall = stats_for(row.kind, [](const Metrics& m) { return m.recall; });
    row.precision = stats_for(row.kind, [](const Metrics& m) { return m.precision; });
    row.accuracy = stats_for(row.kind, [](const Metrics& m) { return m.accuracy; });
    row.auc = stats_for(row.kind, [](const Metrics& m) { return m.auc; });
  }
  return out;
}

std::string render_benchmark_table(const std::vector<BenchSummary>& summary) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "%-20s %5s %16s %16s %16s %16s %16s\n", "kind", "runs",
                "f1", "recall", "precision", "accuracy", "auc");
  out += line;
  auto cell = [](const MetricStats& s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f±%.4f", s.mean, s.stddev);
    return std::string(buf);
  };
  for (const BenchSummary& row : summary) {
    std::snprintf(line, sizeof(line), "%-20s %5d %16s %16s %16s %16s %16s\n",
                  to_string(row.kind).c_str(), row.runs, cell(row.f1).c_str(),
                  cell(row.recall).c_str(), cell(row.precision).c_str(),
                  cell(row.accuracy).c_str(), cell(row.auc).c_str());
    out += line;
  }
  return out;
}

std::string benchmark_csv(const std::vector<BenchRun>& runs) {
  std::string out = "kind,seed,f1,recall,precision,accuracy,auc,tp,fp,fn,tn\n";
  char line[512];
  for (const BenchRun& run : runs) {
    std::snprintf(line, sizeof(line), "%s,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%ld,%ld,%ld,%ld\n",
                  to_string(run.kind).c_str(), static_cast<unsigned long long>(run.seed),
                  run.test.f1, run.test.recall, run.test.precision, run.test.accuracy,
                  run.test.auc, run.test.tp, run.test.fp, run.test.fn, run.test.tn);
    out += line;
  }
  return out;
}

nlohmann::json benchmark_json(const std::vector<BenchRun>& runs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const BenchRun& run : runs) {
    nlohmann::json j;
    j["kind"] = to_string(run.kind);
    j["seed"] = run.seed;
    j["metrics"] = metrics_to_json(run.test);
    j["wall_time_seconds"] = run.wall_time_seconds;
    arr.push_back(j);
  }
  return arr;
}

}  // namespace ergnn
