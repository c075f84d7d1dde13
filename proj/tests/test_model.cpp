#include <doctest.h>

#include <cmath>

#include "ergnn/model.hpp"
#include "ergnn/nn.hpp"
#include "ergnn/rng.hpp"
#include "oracles.hpp"

using namespace ergnn;

namespace {

MultiRelationGraph three_node_line() {
  Mat f(3, 2);
  f << 1, 0, 0, 1, 0, 1;  // node 0 center, nodes 1/2 both at (0,1)
  return oracles::make_graph(f, {1, 0, 0}, {{{0, 1}, {0, 2}}},
                             {Split::train, Split::train, Split::test});
}

Mat random_mat(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.uniform(-1.0, 1.0);
  }
  return m;
}

/// 6 nodes, 2 relations, distinct features; scorers randomized so distances
/// carry healthy margins.
struct Fixture {
  MultiRelationGraph g;
  Model model;
  std::vector<std::vector<double>> p;

  explicit Fixture(int layers = 1, Eigen::Index d_out = 4, AggregationMode mode = AggregationMode::full)
      : model(layers, 2, 2, d_out, mode) {
    Mat f(6, 2);
    f << 0.3, -0.8, 1.7, 2.2, -0.4, 0.9, 2.5, 1.4, 0.1, 0.2, 1.9, 2.8;
    g = oracles::make_graph(
        f, {0, 1, 0, 1, 0, 1},
        {{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}}, {{0, 2}, {1, 3}, {2, 4}, {3, 5}}},
        {Split::train, Split::train, Split::train, Split::train, Split::train, Split::train});
    Rng rng(123);
    model.init_params(rng);
    for (auto& layer_scorers : model.scorers) {
      for (auto& s : layer_scorers) {
        s.weight.value = random_mat(rng, 1, s.input_dim());
        s.bias.value(0, 0) = 0.1 * rng.uniform(-1.0, 1.0);
      }
    }
    p.assign(static_cast<std::size_t>(layers), std::vector<double>(2, 0.46));
  }
};

}  // namespace

TEST_CASE("intra_relation_aggregate forms the convex combination") {
  const auto g = three_node_line();
  RelationScorer scorer(2);
  const RowVec h = intra_relation_aggregate(g, scorer, 0.6, 0, 0, g.features);
  CHECK(h(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(h(0, 1) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("intra_relation_aggregate leaves isolated nodes unchanged") {
  Mat f(2, 2);
  f << 3, -4, 1, 1;
  auto g = oracles::make_graph(f, {1, 0}, {{{1, 1}}}, {Split::train, Split::test});
  g.relations[0].offsets = {0, 0, 0};
  g.relations[0].neighbors.clear();
  RelationScorer scorer(2);
  const RowVec h = intra_relation_aggregate(g, scorer, 0.3, 0, 0, g.features);
  CHECK(h(0, 0) == 3.0);
  CHECK(h(0, 1) == -4.0);
}

TEST_CASE("intra_relation_aggregate at p = 1 is the central row alone") {
  const auto g = three_node_line();
  RelationScorer scorer(2);
  const RowVec h = intra_relation_aggregate(g, scorer, 1.0, 0, 0, g.features);
  CHECK(h(0, 0) == 1.0);
  CHECK(h(0, 1) == 0.0);
}

TEST_CASE("no_enhancer mode is the plain mean over self and kept neighbors") {
  const auto g = three_node_line();
  RelationScorer scorer(2);
  const RowVec h =
      intra_relation_aggregate(g, scorer, 1.0, 0, 0, g.features, AggregationMode::no_enhancer);
  // {self, both neighbors} each weighted 1/3
  CHECK(h(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(h(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("inter_relation_aggregate exposes the concatenation order") {
  LayerParams layer(4, 2, 1);
  layer.W.value = Mat::Identity(4, 4);
  RowVec h_prev(2);
  h_prev << 1, -1;
  RowVec rel(2);
  rel << 0.5, 0.5;
  const RowVec out = inter_relation_aggregate(layer, h_prev, {rel});
  CHECK(out(0, 0) == 1.0);
  CHECK(out(0, 1) == 0.0);  // ReLU clips the negative slot
  CHECK(out(0, 2) == 0.5);
  CHECK(out(0, 3) == 0.5);
}

TEST_CASE("inter_relation_aggregate with zero weights is zero") {
  LayerParams layer(3, 2, 2);
  RowVec h_prev(2), r0(2), r1(2);
  h_prev << 5, 6;
  r0 << 7, 8;
  r1 << 9, 10;
  CHECK(inter_relation_aggregate(layer, h_prev, {r0, r1}).isZero());
}

TEST_CASE("inter_relation_aggregate matches the loop oracle for R = 2") {
  Rng rng(9);
  LayerParams layer(3, 2, 2);
  layer.W.value = random_mat(rng, 3, 6);
  layer.bias.value = random_mat(rng, 1, 3);
  RowVec h_prev = random_mat(rng, 1, 2).row(0);
  RowVec r0 = random_mat(rng, 1, 2).row(0);
  RowVec r1 = random_mat(rng, 1, 2).row(0);

  Mat concat(1, 6);
  concat << h_prev(0), h_prev(1), r0(0), r0(1), r1(0), r1(1);
  const Mat want = oracles::naive_linear(layer.W.value, layer.bias.value, concat)
                       .cwiseMax(0.0);
  const RowVec got = inter_relation_aggregate(layer, h_prev, {r0, r1});
  for (int j = 0; j < 3; ++j) CHECK(std::abs(got(0, j) - want(0, j)) < 1e-12);

  CHECK_THROWS_AS(inter_relation_aggregate(layer, h_prev, {r0}), DimensionError);
}

TEST_CASE("forward on an isolated node repeats the feature across slots") {
  Mat f(1, 2);
  f << 0.7, -0.2;
  MultiRelationGraph g;
  g.features = f;
  g.labels = {1};
  g.split = {Split::train};
  Relation rel;
  rel.name = "r0";
  rel.offsets = {0, 0};
  g.relations.push_back(rel);

  Model model(1, 1, 2, 4, AggregationMode::full);
  model.layers[0].W.value = Mat::Identity(4, 4);
  const std::vector<std::vector<double>> p{{0.5}};
  const SelectionTable table = build_selection_table(g, model, p);
  const std::vector<NodeId> batch{0};
  const Mat h = forward(g, model, table, p, batch);
  CHECK(h(0, 0) == 0.7);
  CHECK(h(0, 1) == 0.0);  // ReLU of -0.2
  CHECK(h(0, 2) == 0.7);
  CHECK(h(0, 3) == 0.0);
}

TEST_CASE("forward is bit-deterministic") {
  Fixture fx;
  const SelectionTable table = build_selection_table(fx.g, fx.model, fx.p);
  const std::vector<NodeId> batch{0, 3, 5};
  const Mat a = forward(fx.g, fx.model, table, fx.p, batch);
  const Mat b = forward(fx.g, fx.model, table, fx.p, batch);
  CHECK(a == b);
}

TEST_CASE("forward rejects bad batches") {
  Fixture fx;
  const SelectionTable table = build_selection_table(fx.g, fx.model, fx.p);
  const std::vector<NodeId> out_of_range{17};
  CHECK_THROWS_AS(forward(fx.g, fx.model, table, fx.p, out_of_range), std::out_of_range);
  const std::vector<NodeId> empty;
  CHECK_THROWS_AS(forward(fx.g, fx.model, table, fx.p, empty), ValidationError);
}

TEST_CASE("intra-relation weights sum to one: constant features are fixed points") {
  for (const auto mode :
       {AggregationMode::full, AggregationMode::no_filter, AggregationMode::no_enhancer}) {
    Fixture fx(1, 4, mode);
    Mat constant(6, 2);
    for (int i = 0; i < 6; ++i) constant.row(i) << 1.5, -2.5;
    fx.g.features = constant;
    for (double p : {0.1, 0.46, 1.0}) {
      for (int r = 0; r < 2; ++r) {
        const RowVec h = intra_relation_aggregate(fx.g, fx.model.scorers[0][0], p, 2, r,
                                                  fx.g.features, mode);
        CHECK(h(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(h(0, 1) == doctest::Approx(-2.5).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("neighbor input order never changes the aggregation") {
  // same undirected edges fed in different orders canonicalize identically
  Rng rng(77);
  Mat f = random_mat(rng, 5, 2);
  std::vector<int> labels{1, 0, 0, 1, 0};
  std::vector<Split> split(5, Split::train);
  auto a = oracles::make_graph(f, labels, {{{0, 1}, {0, 2}, {0, 4}}}, split);
  auto b = oracles::make_graph(f, labels, {{{0, 4}, {2, 0}, {1, 0}}}, split);
  RelationScorer scorer(2);
  scorer.weight.value << 0.4, -0.9;
  const RowVec ha = intra_relation_aggregate(a, scorer, 0.7, 0, 0, f);
  const RowVec hb = intra_relation_aggregate(b, scorer, 0.7, 0, 0, f);
  CHECK(ha == hb);
}

TEST_CASE("swapping relations together with W column blocks is a no-op") {
  Fixture fx;
  const std::vector<NodeId> batch{0, 1, 2, 3, 4, 5};
  const SelectionTable table = build_selection_table(fx.g, fx.model, fx.p);
  const Mat base = forward(fx.g, fx.model, table, fx.p, batch);

  Fixture swapped;
  std::swap(swapped.g.relations[0], swapped.g.relations[1]);
  swapped.g.relations[0].name = "r0";
  swapped.g.relations[1].name = "r1";
  std::swap(swapped.model.scorers[0][0], swapped.model.scorers[0][1]);
  const Eigen::Index d = 2;
  Mat w = swapped.model.layers[0].W.value;
  const Mat slot1 = w.block(0, d, w.rows(), d);
  w.block(0, d, w.rows(), d) = w.block(0, 2 * d, w.rows(), d);
  w.block(0, 2 * d, w.rows(), d) = slot1;
  swapped.model.layers[0].W.value = w;

  const SelectionTable table2 = build_selection_table(swapped.g, swapped.model, swapped.p);
  const Mat out = forward(swapped.g, swapped.model, table2, swapped.p, batch);
  CHECK((base - out).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("central-feature preservation bound") {
  Fixture fx;
  for (double p : {0.5, 0.8, 0.95}) {
    for (NodeId v = 0; v < 6; ++v) {
      for (int r = 0; r < 2; ++r) {
        const RowVec h = intra_relation_aggregate(fx.g, fx.model.scorers[0][static_cast<std::size_t>(r)],
                                                  p, v, r, fx.g.features);
        const RowVec self = fx.g.features.row(v);
        const auto kept = filter_neighbors(fx.g, fx.model.scorers[0][static_cast<std::size_t>(r)],
                                           fx.g.features, v, r, p);
        if (kept.empty()) {
          CHECK((h - self).norm() == 0.0);
          continue;
        }
        RowVec mean = RowVec::Zero(2);
        for (const NodeId u : kept) mean += fx.g.features.row(u);
        mean /= static_cast<double>(kept.size());
        CHECK((h - self).norm() <= (1.0 - p) * (mean - self).norm() + 1e-12);
      }
    }
  }
}

TEST_CASE("backward matches finite differences through one layer") {
  Fixture fx;
  const std::vector<NodeId> batch{0, 1, 2, 3, 4, 5};
  const SelectionTable table = build_selection_table(fx.g, fx.model, fx.p);

  auto loss_value = [&] {
    return forward(fx.g, fx.model, table, fx.p, batch).sum();
  };
  fx.model.zero_grad();
  ForwardCache cache;
  const Mat h = forward(fx.g, fx.model, table, fx.p, batch, &cache);
  backward(fx.g, fx.model, cache, Mat::Ones(h.rows(), h.cols()));
  const Mat analytic_w = fx.model.layers[0].W.grad;
  const Mat analytic_b = fx.model.layers[0].bias.grad;

  const Mat fd_w = nn::finite_diff_grad(fx.model.layers[0].W, 1e-5, loss_value);
  const Mat fd_b = nn::finite_diff_grad(fx.model.layers[0].bias, 1e-5, loss_value);
  CHECK((analytic_w - fd_w).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((analytic_b - fd_b).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("backward matches finite differences through two layers") {
  Fixture fx(2, 4);
  const std::vector<NodeId> batch{0, 2, 5};
  const SelectionTable table = build_selection_table(fx.g, fx.model, fx.p);

  auto loss_value = [&] {
    return forward(fx.g, fx.model, table, fx.p, batch).sum();
  };
  fx.model.zero_grad();
  ForwardCache cache;
  const Mat h = forward(fx.g, fx.model, table, fx.p, batch, &cache);
  backward(fx.g, fx.model, cache, Mat::Ones(h.rows(), h.cols()));

  for (int l = 0; l < 2; ++l) {
    const Mat analytic = fx.model.layers[static_cast<std::size_t>(l)].W.grad;
    const Mat fd = nn::finite_diff_grad(fx.model.layers[static_cast<std::size_t>(l)].W, 1e-5, loss_value);
    for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
      for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
        const double denom = std::max({std::abs(analytic(i, j)), std::abs(fd(i, j)), 1e-4});
        CHECK(std::abs(analytic(i, j) - fd(i, j)) / denom < 1e-4);
      }
    }
  }
}

TEST_CASE("aggregation mode strings round-trip") {
  for (const auto mode :
       {AggregationMode::full, AggregationMode::no_filter, AggregationMode::no_enhancer}) {
    CHECK(aggregation_mode_from_string(to_string(mode)) == mode);
  }
  CHECK_THROWS_AS(aggregation_mode_from_string("bogus"), ValidationError);
}
