#include "ergnn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <unordered_set>
#include <utility>

#include "ergnn/hash.hpp"
#include "ergnn/rng.hpp"

namespace ergnn {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    std::string field = line.substr(start, pos - start);
    // trim spaces and trailing CR
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r' || field.back() == '\t')) {
      field.pop_back();
    }
    std::size_t lead = 0;
    while (lead < field.size() && (field[lead] == ' ' || field[lead] == '\t')) ++lead;
    out.push_back(field.substr(lead));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void parse_fail(const std::filesystem::path& file, std::size_t line_no,
                             const std::string& what) {
  throw ParseError(file.string() + ":" + std::to_string(line_no) + ": " + what);
}

long parse_long(const std::string& s, const std::filesystem::path& file, std::size_t line_no) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    parse_fail(file, line_no, "expected integer, got '" + s + "'");
  }
  return value;
}

double parse_double(const std::string& s, const std::filesystem::path& file, std::size_t line_no) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    parse_fail(file, line_no, "expected real number, got '" + s + "'");
  }
  return value;
}

std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw IoError("cannot open " + file.string());
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

/// Builds sorted, deduplicated CSR rows from a directed edge list that
/// already contains both directions.
Relation build_relation(std::string name, std::size_t num_nodes,
                        const std::vector<std::pair<NodeId, NodeId>>& directed) {
  std::vector<std::vector<NodeId>> rows(num_nodes);
  for (const auto& [u, v] : directed) {
    rows[static_cast<std::size_t>(u)].push_back(v);
  }
  Relation rel;
  rel.name = std::move(name);
  rel.offsets.assign(num_nodes + 1, 0);
  for (std::size_t v = 0; v < num_nodes; ++v) {
    auto& row = rows[v];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    rel.offsets[v + 1] = rel.offsets[v] + static_cast<std::int64_t>(row.size());
    rel.neighbors.insert(rel.neighbors.end(), row.begin(), row.end());
  }
  return rel;
}

}  // namespace

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split value '" + s + "'");
}

std::span<const NodeId> MultiRelationGraph::neighbors(NodeId v, int r) const {
  if (v < 0 || v >= num_nodes()) {
    throw std::out_of_range("node id " + std::to_string(v) + " out of range [0, " +
                            std::to_string(num_nodes()) + ")");
  }
  if (r < 0 || r >= num_relations()) {
    throw std::out_of_range("relation index " + std::to_string(r) + " out of range [0, " +
                            std::to_string(num_relations()) + ")");
  }
  const Relation& rel = relations[static_cast<std::size_t>(r)];
  const auto begin = rel.offsets[static_cast<std::size_t>(v)];
  const auto end = rel.offsets[static_cast<std::size_t>(v) + 1];
  return {rel.neighbors.data() + begin, static_cast<std::size_t>(end - begin)};
}

std::vector<NodeId> MultiRelationGraph::nodes_in(Split s) const {
  std::vector<NodeId> out;
  for (Eigen::Index v = 0; v < num_nodes(); ++v) {
    if (split[static_cast<std::size_t>(v)] == s) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

std::int64_t MultiRelationGraph::count_in(Split s) const {
  return static_cast<std::int64_t>(
      std::count(split.begin(), split.end(), s));
}

std::uint64_t MultiRelationGraph::fingerprint() const {
  Fnv1a h;
  h.update_value<std::int64_t>(num_nodes());
  h.update_value<std::int64_t>(feature_dim());
  h.update_value<std::int32_t>(num_relations());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      h.update_value<double>(features(i, j));
    }
  }
  for (int label : labels) h.update_value<std::int32_t>(label);
  for (const Relation& rel : relations) {
    h.update(rel.name);
    for (auto o : rel.offsets) h.update_value<std::int64_t>(o);
    for (auto v : rel.neighbors) h.update_value<NodeId>(v);
  }
  for (Split s : split) h.update_value<std::uint8_t>(static_cast<std::uint8_t>(s));
  return h.digest();
}

void MultiRelationGraph::validate() const {
  const auto n = static_cast<std::size_t>(num_nodes());
  if (!all_finite(features)) {
    throw ValidationError("graph features contain non-finite values");
  }
  if (labels.size() != n) {
    throw ValidationError("label count " + std::to_string(labels.size()) +
                          " does not match node count " + std::to_string(n));
  }
  if (split.size() != n) {
    throw ValidationError("split mask count does not match node count");
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (labels[v] != 0 && labels[v] != 1) {
      throw ValidationError("node " + std::to_string(v) + " has label " +
                            std::to_string(labels[v]) + ", expected 0 or 1");
    }
  }
  if (relations.empty()) {
    throw ValidationError("graph has no relations");
  }
  for (const Relation& rel : relations) {
    if (rel.offsets.size() != n + 1 || rel.offsets.front() != 0 ||
        rel.offsets.back() != static_cast<std::int64_t>(rel.neighbors.size())) {
      throw ValidationError("relation '" + rel.name + "' has inconsistent offsets");
    }
    for (std::size_t v = 0; v < n; ++v) {
      const auto begin = rel.offsets[v];
      const auto end = rel.offsets[v + 1];
      if (end < begin) {
        throw ValidationError("relation '" + rel.name + "' has decreasing offsets");
      }
      for (auto i = begin; i < end; ++i) {
        const NodeId u = rel.neighbors[static_cast<std::size_t>(i)];
        if (u < 0 || static_cast<std::size_t>(u) >= n) {
          throw ValidationError("relation '" + rel.name + "' references node " +
                                std::to_string(u) + " outside [0, " + std::to_string(n) + ")");
        }
        if (i > begin && rel.neighbors[static_cast<std::size_t>(i - 1)] >= u) {
          throw ValidationError("relation '" + rel.name + "' row " + std::to_string(v) +
                                " is not sorted/unique");
        }
      }
    }
    // symmetry: u in N(v) implies v in N(u)
    for (std::size_t v = 0; v < n; ++v) {
      for (auto i = rel.offsets[v]; i < rel.offsets[v + 1]; ++i) {
        const NodeId u = rel.neighbors[static_cast<std::size_t>(i)];
        const auto ub = static_cast<std::size_t>(u);
        const auto* lo = rel.neighbors.data() + rel.offsets[ub];
        const auto* hi = rel.neighbors.data() + rel.offsets[ub + 1];
        if (!std::binary_search(lo, hi, static_cast<NodeId>(v))) {
          throw ValidationError("relation '" + rel.name + "' is not symmetric at edge (" +
                                std::to_string(v) + ", " + std::to_string(u) + ")");
        }
      }
    }
  }
  bool any_fraud = false;
  bool train_fraud = false;
  for (std::size_t v = 0; v < n; ++v) {
    if (labels[v] == 1) {
      any_fraud = true;
      if (split[v] == Split::train) train_fraud = true;
    }
  }
  if (!any_fraud) {
    throw ValidationError("dataset contains zero fraud labels");
  }
  if (!train_fraud) {
    throw ValidationError("train mask contains no fraud-labeled node; training would be degenerate");
  }
}

bool MultiRelationGraph::operator==(const MultiRelationGraph& other) const {
  if (num_nodes() != other.num_nodes() || features != other.features ||
      labels != other.labels || split != other.split ||
      relations.size() != other.relations.size()) {
    return false;
  }
  for (std::size_t r = 0; r < relations.size(); ++r) {
    if (relations[r].name != other.relations[r].name ||
        relations[r].offsets != other.relations[r].offsets ||
        relations[r].neighbors != other.relations[r].neighbors) {
      return false;
    }
  }
  return true;
}

void SyntheticConfig::validate() const {
  if (n_fraud < 1) throw ValidationError("n_fraud must be >= 1");
  if (n_benign < 0) throw ValidationError("n_benign must be >= 0");
  if (feature_dim < 1) throw ValidationError("feature_dim must be >= 1");
  if (camouflage_ratio < 0.0 || camouflage_ratio > 1.0) {
    throw ValidationError("camouflage_ratio must lie in [0, 1], got " +
                          fmt_double(camouflage_ratio));
  }
  if (avg_degree < 1.0) throw ValidationError("avg_degree must be >= 1");
  if (num_relations < 1) throw ValidationError("num_relations must be >= 1");
  if (benign_mean.size() != static_cast<std::size_t>(feature_dim) ||
      fraud_mean.size() != static_cast<std::size_t>(feature_dim)) {
    throw ValidationError("class mean vectors must have feature_dim entries");
  }
  if (!(train_frac > 0.0) || !(val_frac > 0.0) || train_frac + val_frac >= 1.0) {
    throw ValidationError("split fractions must be positive with train_frac + val_frac < 1");
  }
}

MultiRelationGraph load_dataset(const std::filesystem::path& dir, LoadStats* stats,
                                std::uint64_t split_seed) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("dataset directory not found: " + dir.string());
  }

  // features.csv
  const auto feat_path = dir / "features.csv";
  const auto feat_lines = read_lines(feat_path);
  if (feat_lines.empty()) parse_fail(feat_path, 1, "missing header row");
  const auto header = split_fields(feat_lines[0]);
  if (header.size() < 2 || header[0] != "node_id") {
    parse_fail(feat_path, 1, "expected header 'node_id,f0,...'");
  }
  const auto dim = header.size() - 1;
  std::vector<std::vector<double>> feature_rows;
  for (std::size_t i = 1; i < feat_lines.size(); ++i) {
    if (blank(feat_lines[i])) continue;
    const auto fields = split_fields(feat_lines[i]);
    if (fields.size() != dim + 1) {
      parse_fail(feat_path, i + 1, "expected " + std::to_string(dim + 1) + " fields, got " +
                                       std::to_string(fields.size()));
    }
    const long id = parse_long(fields[0], feat_path, i + 1);
    if (id != static_cast<long>(feature_rows.size())) {
      throw ValidationError(feat_path.string() + ":" + std::to_string(i + 1) +
                            ": node ids must be 0..n-1 contiguous and sorted, got " +
                            std::to_string(id));
    }
    std::vector<double> row(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      row[j] = parse_double(fields[j + 1], feat_path, i + 1);
    }
    feature_rows.push_back(std::move(row));
  }
  const std::size_t n = feature_rows.size();
  if (n == 0) throw ValidationError(feat_path.string() + ": dataset has no nodes");

  MultiRelationGraph g;
  g.features = Mat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t j = 0; j < dim; ++j) {
      g.features(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(j)) = feature_rows[v][j];
    }
  }

  // labels.csv
  const auto label_path = dir / "labels.csv";
  const auto label_lines = read_lines(label_path);
  if (label_lines.empty()) parse_fail(label_path, 1, "missing header row");
  g.labels.assign(n, -1);
  for (std::size_t i = 1; i < label_lines.size(); ++i) {
    if (blank(label_lines[i])) continue;
    const auto fields = split_fields(label_lines[i]);
    if (fields.size() != 2) parse_fail(label_path, i + 1, "expected 'node_id,label'");
    const long id = parse_long(fields[0], label_path, i + 1);
    const long lab = parse_long(fields[1], label_path, i + 1);
    if (id < 0 || static_cast<std::size_t>(id) >= n) {
      throw ValidationError(label_path.string() + ":" + std::to_string(i + 1) + ": node id " +
                            std::to_string(id) + " outside [0, " + std::to_string(n) + ")");
    }
    if (lab != 0 && lab != 1) {
      throw ValidationError(label_path.string() + ":" + std::to_string(i + 1) + ": label must be 0 or 1");
    }
    if (g.labels[static_cast<std::size_t>(id)] != -1) {
      throw ValidationError(label_path.string() + ":" + std::to_string(i + 1) + ": duplicate label for node " +
                            std::to_string(id));
    }
    g.labels[static_cast<std::size_t>(id)] = static_cast<int>(lab);
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (g.labels[v] == -1) {
      throw ValidationError(label_path.string() + ": node " + std::to_string(v) + " has no label");
    }
  }

  // edge files, lexicographic by file name; the relation name is the part
  // between "edges_" and ".csv"
  std::vector<std::filesystem::path> edge_files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("edges_") && name.ends_with(".csv")) {
      edge_files.push_back(entry.path());
    }
  }
  std::sort(edge_files.begin(), edge_files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  if (edge_files.empty()) {
    throw ValidationError("dataset directory " + dir.string() + " has no edges_<relation>.csv files");
  }

  LoadStats local_stats;
  for (const auto& path : edge_files) {
    const auto fname = path.filename().string();
    std::string rel_name = fname.substr(6, fname.size() - 6 - 4);
    const auto lines = read_lines(path);
    if (lines.empty()) parse_fail(path, 1, "missing header row");
    std::vector<std::pair<NodeId, NodeId>> directed;
    std::unordered_set<std::int64_t> present;
    auto key = [n](NodeId a, NodeId b) {
      return static_cast<std::int64_t>(a) * static_cast<std::int64_t>(n) + b;
    };
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (blank(lines[i])) continue;
      const auto fields = split_fields(lines[i]);
      if (fields.size() != 2) parse_fail(path, i + 1, "expected 'src,dst'");
      const long src = parse_long(fields[0], path, i + 1);
      const long dst = parse_long(fields[1], path, i + 1);
      if (src < 0 || static_cast<std::size_t>(src) >= n || dst < 0 ||
          static_cast<std::size_t>(dst) >= n) {
        throw ValidationError(path.string() + ":" + std::to_string(i + 1) + ": edge endpoint (" +
                              std::to_string(src) + ", " + std::to_string(dst) +
                              ") outside [0, " + std::to_string(n) + ")");
      }
      const auto u = static_cast<NodeId>(src);
      const auto v = static_cast<NodeId>(dst);
      directed.emplace_back(u, v);
      present.insert(key(u, v));
    }
    std::vector<std::pair<NodeId, NodeId>> full = directed;
    for (const auto& [u, v] : directed) {
      if (!present.count(key(v, u))) {
        full.emplace_back(v, u);
        present.insert(key(v, u));
        local_stats.reverse_edges_added += 1;
      }
    }
    g.relations.push_back(build_relation(std::move(rel_name), n, full));
  }

  // split.csv, optional
  const auto split_path = dir / "split.csv";
  if (std::filesystem::exists(split_path)) {
    local_stats.split_file_present = true;
    const auto lines = read_lines(split_path);
    if (lines.empty()) parse_fail(split_path, 1, "missing header row");
    std::vector<int> seen(n, 0);
    g.split.assign(n, Split::test);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (blank(lines[i])) continue;
      const auto fields = split_fields(lines[i]);
      if (fields.size() != 2) parse_fail(split_path, i + 1, "expected 'node_id,split'");
      const long id = parse_long(fields[0], split_path, i + 1);
      if (id < 0 || static_cast<std::size_t>(id) >= n) {
        throw ValidationError(split_path.string() + ":" + std::to_string(i + 1) + ": node id out of range");
      }
      g.split[static_cast<std::size_t>(id)] = split_from_string(fields[1]);
      seen[static_cast<std::size_t>(id)] += 1;
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (seen[v] != 1) {
        throw ValidationError(split_path.string() + ": node " + std::to_string(v) +
                              " must appear exactly once");
      }
    }
  } else {
    g.split = stratified_split(g.labels, 0.4, 0.2, split_seed);
  }

  if (local_stats.reverse_edges_added > 0) {
    std::cerr << "load_dataset: added " << local_stats.reverse_edges_added
              << " missing reverse edges during symmetrization\n";
  }
  if (stats) *stats = local_stats;
  g.validate();
  return g;
}

void save_dataset(const MultiRelationGraph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto n = g.num_nodes();

  {
    std::ofstream out(dir / "features.csv");
    if (!out) throw IoError("cannot write " + (dir / "features.csv").string());
    out << "node_id";
    for (Eigen::Index j = 0; j < g.feature_dim(); ++j) out << ",f" << j;
    out << "\n";
    for (Eigen::Index v = 0; v < n; ++v) {
      out << v;
      for (Eigen::Index j = 0; j < g.feature_dim(); ++j) out << "," << fmt_double(g.features(v, j));
      out << "\n";
    }
  }
  {
    std::ofstream out(dir / "labels.csv");
    if (!out) throw IoError("cannot write " + (dir / "labels.csv").string());
    out << "node_id,label\n";
    for (Eigen::Index v = 0; v < n; ++v) {
      out << v << "," << g.labels[static_cast<std::size_t>(v)] << "\n";
    }
  }
  for (const Relation& rel : g.relations) {
    std::ofstream out(dir / ("edges_" + rel.name + ".csv"));
    if (!out) throw IoError("cannot write edges_" + rel.name + ".csv");
    out << "src,dst\n";
    // one row per undirected edge
    for (Eigen::Index v = 0; v < n; ++v) {
      const auto sv = static_cast<std::size_t>(v);
      for (auto i = rel.offsets[sv]; i < rel.offsets[sv + 1]; ++i) {
        const NodeId u = rel.neighbors[static_cast<std::size_t>(i)];
        if (u >= v) out << v << "," << u << "\n";
      }
    }
  }
  {
    std::ofstream out(dir / "split.csv");
    if (!out) throw IoError("cannot write " + (dir / "split.csv").string());
    out << "node_id,split\n";
    for (Eigen::Index v = 0; v < n; ++v) {
      out << v << "," << to_string(g.split[static_cast<std::size_t>(v)]) << "\n";
    }
  }
}

MultiRelationGraph generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  const std::size_t n = static_cast<std::size_t>(config.n_benign) +
                        static_cast<std::size_t>(config.n_fraud);
  Rng rng(config.seed);

  MultiRelationGraph g;
  g.labels.assign(n, 0);
  for (std::size_t v = static_cast<std::size_t>(config.n_benign); v < n; ++v) g.labels[v] = 1;

  g.features = Mat(static_cast<Eigen::Index>(n), config.feature_dim);
  for (std::size_t v = 0; v < n; ++v) {
    const auto& mean = g.labels[v] == 1 ? config.fraud_mean : config.benign_mean;
    for (int j = 0; j < config.feature_dim; ++j) {
      g.features(static_cast<Eigen::Index>(v), j) = mean[static_cast<std::size_t>(j)] + rng.normal();
    }
  }

  const NodeId benign_base = 0;
  const auto benign_count = static_cast<std::uint64_t>(config.n_benign);
  const auto fraud_base = static_cast<NodeId>(config.n_benign);
  const auto fraud_count = static_cast<std::uint64_t>(config.n_fraud);
  const double per_node = config.avg_degree / 2.0;  // each edge raises two degrees

  int name_width = 1;
  for (int v = config.num_relations - 1; v >= 10; v /= 10) ++name_width;

  for (int r = 0; r < config.num_relations; ++r) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t v = 0; v < n; ++v) {
      std::size_t draws = static_cast<std::size_t>(per_node);
      if (rng.uniform() < per_node - static_cast<double>(draws)) ++draws;
      for (std::size_t i = 0; i < draws; ++i) {
        bool to_benign = true;
        if (g.labels[v] == 1) {
          to_benign = rng.uniform() < config.camouflage_ratio;
        }
        const NodeId base = to_benign ? benign_base : fraud_base;
        const std::uint64_t count = to_benign ? benign_count : fraud_count;
        if (count == 0) continue;
        for (int attempt = 0; attempt < 32; ++attempt) {
          const auto t = static_cast<NodeId>(base + static_cast<NodeId>(rng.below(count)));
          if (t != static_cast<NodeId>(v)) {
            edges.emplace_back(static_cast<NodeId>(v), t);
            break;
          }
        }
      }
    }
    std::vector<std::pair<NodeId, NodeId>> directed;
    directed.reserve(edges.size() * 2);
    for (const auto& [u, v] : edges) {
      directed.emplace_back(u, v);
      directed.emplace_back(v, u);
    }
    std::string rel_name = std::to_string(r);
    while (rel_name.size() < static_cast<std::size_t>(name_width)) rel_name.insert(0, "0");
    g.relations.push_back(build_relation("r" + rel_name, n, directed));
  }

  g.split = stratified_split(g.labels, config.train_frac, config.val_frac, config.seed);
  g.validate();
  return g;
}

std::vector<Split> stratified_split(std::span<const int> labels, double train_frac,
                                    double val_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0) || !(val_frac > 0.0) || train_frac + val_frac >= 1.0) {
    throw ValidationError("split fractions must be positive with train_frac + val_frac < 1");
  }
  std::vector<NodeId> by_class[2];
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (labels[v] != 0 && labels[v] != 1) {
      throw ValidationError("stratified_split: label must be 0 or 1");
    }
    by_class[labels[v]].push_back(static_cast<NodeId>(v));
  }
  Rng rng(seed);
  std::vector<Split> out(labels.size(), Split::test);
  for (auto& ids : by_class) {
    if (ids.empty()) continue;
    if (ids.size() < 3) {
      throw ValidationError("a class has " + std::to_string(ids.size()) +
                            " nodes, fewer than the 3 split buckets");
    }
    rng.shuffle(ids);
    const auto count = static_cast<double>(ids.size());
    const auto n_train = static_cast<std::size_t>(std::floor(train_frac * count));
    const auto n_train_val = static_cast<std::size_t>(std::floor((train_frac + val_frac) * count));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto v = static_cast<std::size_t>(ids[i]);
      out[v] = i < n_train ? Split::train : (i < n_train_val ? Split::val : Split::test);
    }
  }
  return out;
}

}  // namespace ergnn
