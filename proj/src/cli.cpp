#include "ergnn/cli.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "ergnn/baselines.hpp"
#include "ergnn/graph.hpp"
#include "ergnn/hash.hpp"
#include "ergnn/json_io.hpp"
#include "ergnn/trainer.hpp"

namespace ergnn::cli {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(',', start);
    std::string item = s.substr(start, pos - start);
    while (!item.empty() && (item.front() == ' ' || item.front() == '\t')) item.erase(item.begin());
    while (!item.empty() && (item.back() == ' ' || item.back() == '\t')) item.pop_back();
    if (!item.empty()) out.push_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_number<double>(key, item));
  if (out.empty()) throw ValidationError("config key '" + key + "': empty list");
  return out;
}

/// Every documented config key, merged from file then flags.
struct Options {
  // training
  std::optional<int> epochs, layers, batch_size, d_out;
  std::optional<double> learning_rate, lambda, tau;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> dataset;
  // synthetic data
  std::optional<int> n_benign, n_fraud, feature_dim, num_relations;
  std::optional<double> camouflage_ratio, avg_degree, train_frac, val_frac;
  std::optional<std::vector<double>> benign_mean, fraud_mean;
  std::optional<std::uint64_t> data_seed;
  // bench
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::vector<std::string>> kinds;

  void set(const std::string& key, const std::string& value) {
    if (key == "epochs") epochs = parse_number<int>(key, value);
    else if (key == "layers") layers = parse_number<int>(key, value);
    else if (key == "batch_size") batch_size = parse_number<int>(key, value);
    else if (key == "d_out") d_out = parse_number<int>(key, value);
    else if (key == "learning_rate") learning_rate = parse_number<double>(key, value);
    else if (key == "lambda") lambda = parse_number<double>(key, value);
    else if (key == "tau") tau = parse_number<double>(key, value);
    else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
    else if (key == "dataset") dataset = value;
    else if (key == "n_benign") n_benign = parse_number<int>(key, value);
    else if (key == "n_fraud") n_fraud = parse_number<int>(key, value);
    else if (key == "feature_dim") feature_dim = parse_number<int>(key, value);
    else if (key == "num_relations") num_relations = parse_number<int>(key, value);
    else if (key == "camouflage_ratio") camouflage_ratio = parse_number<double>(key, value);
    else if (key == "avg_degree") avg_degree = parse_number<double>(key, value);
    else if (key == "train_frac") train_frac = parse_number<double>(key, value);
    else if (key == "val_frac") val_frac = parse_number<double>(key, value);
    else if (key == "benign_mean") benign_mean = parse_double_list(key, value);
    else if (key == "fraud_mean") fraud_mean = parse_double_list(key, value);
    else if (key == "data_seed") data_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "seeds") {
      std::vector<std::uint64_t> xs;
      for (const auto& item : split_list(value)) xs.push_back(parse_number<std::uint64_t>(key, item));
      if (xs.empty()) throw ValidationError("config key 'seeds': empty list");
      seeds = xs;
    } else if (key == "kinds") {
      kinds = split_list(value);
    } else {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
};

void load_config_file(Options& opts, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
      return s;
    };
    opts.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::string preset;
  std::string data_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int verbosity = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key=value config file");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "seed override")->each([&](const std::string&) {
    flags.seed_set = true;
  });
  cmd->add_option("--preset", flags.preset, "preset: synthetic or amazon-format")
      ->check(CLI::IsMember({"synthetic", "amazon-format"}));
  cmd->add_option("--data", flags.data_dir, "dataset directory");
  cmd->add_flag("-v,--verbose", flags.verbosity, "verbose output");
}

Options gather_options(const CommonFlags& flags) {
  Options opts;
  if (!flags.config_path.empty()) load_config_file(opts, flags.config_path);
  // flags win over file values
  if (!flags.data_dir.empty()) opts.dataset = flags.data_dir;
  if (flags.seed_set) opts.seed = flags.seed;
  return opts;
}

SyntheticConfig synthetic_from(const Options& opts) {
  SyntheticConfig s;
  if (opts.n_benign) s.n_benign = *opts.n_benign;
  if (opts.n_fraud) s.n_fraud = *opts.n_fraud;
  if (opts.feature_dim) s.feature_dim = *opts.feature_dim;
  if (opts.num_relations) s.num_relations = *opts.num_relations;
  if (opts.camouflage_ratio) s.camouflage_ratio = *opts.camouflage_ratio;
  if (opts.avg_degree) s.avg_degree = *opts.avg_degree;
  if (opts.train_frac) s.train_frac = *opts.train_frac;
  if (opts.val_frac) s.val_frac = *opts.val_frac;
  if (opts.benign_mean) s.benign_mean = *opts.benign_mean;
  if (opts.fraud_mean) s.fraud_mean = *opts.fraud_mean;
  if (opts.data_seed) s.seed = *opts.data_seed;
  if (s.benign_mean.size() == 1 && s.feature_dim > 1) {
    s.benign_mean.assign(static_cast<std::size_t>(s.feature_dim), s.benign_mean[0]);
  }
  if (s.fraud_mean.size() == 1 && s.feature_dim > 1) {
    s.fraud_mean.assign(static_cast<std::size_t>(s.feature_dim), s.fraud_mean[0]);
  }
  return s;
}

TrainConfig train_config_from(const Options& opts, const std::string& preset) {
  TrainConfig cfg;
  if (preset == "amazon-format") {
    cfg.learning_rate = 0.005;
    cfg.batch_size = 256;
  }
  if (opts.epochs) cfg.epochs = *opts.epochs;
  if (opts.layers) cfg.layers = *opts.layers;
  if (opts.batch_size) cfg.batch_size = *opts.batch_size;
  if (opts.d_out) cfg.d_out = *opts.d_out;
  if (opts.learning_rate) cfg.learning_rate = *opts.learning_rate;
  if (opts.lambda) cfg.lambda = *opts.lambda;
  if (opts.tau) cfg.tau = *opts.tau;
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.dataset) cfg.dataset_dir = *opts.dataset;
  cfg.synthetic = synthetic_from(opts);
  if (preset == "amazon-format" && cfg.dataset_dir.empty()) {
    throw ValidationError("preset amazon-format requires a dataset directory (--data)");
  }
  cfg.validate();
  return cfg;
}

MultiRelationGraph resolve_graph(const TrainConfig& cfg) {
  if (cfg.dataset_dir.empty()) {
    return generate_synthetic(cfg.synthetic);
  }
  return load_dataset(cfg.dataset_dir, nullptr, cfg.seed);
}

std::string hash_file(const fs::path& path) {
  Fnv1a h;
  h.update(read_text_file(path));
  return h.hex();
}

int cmd_gen_data(const CommonFlags& flags) {
  Options opts = gather_options(flags);
  // for gen-data the seed flag/key addresses the generator itself
  if (flags.seed_set) {
    opts.data_seed = flags.seed;
  } else if (opts.seed && !opts.data_seed) {
    opts.data_seed = opts.seed;
  }
  SyntheticConfig cfg = synthetic_from(opts);
  cfg.validate();
  const MultiRelationGraph g = generate_synthetic(cfg);
  const fs::path out(flags.out_dir);
  save_dataset(g, out);

  nlohmann::json manifest;
  manifest["synthetic"] = {
      {"n_benign", cfg.n_benign},
      {"n_fraud", cfg.n_fraud},
      {"feature_dim", cfg.feature_dim},
      {"benign_mean", cfg.benign_mean},
      {"fraud_mean", cfg.fraud_mean},
      {"camouflage_ratio", cfg.camouflage_ratio},
      {"avg_degree", cfg.avg_degree},
      {"num_relations", cfg.num_relations},
      {"seed", cfg.seed},
      {"train_frac", cfg.train_frac},
      {"val_frac", cfg.val_frac},
  };
  nlohmann::json files;
  std::vector<std::string> names{"features.csv", "labels.csv", "split.csv"};
  for (const Relation& rel : g.relations) names.push_back("edges_" + rel.name + ".csv");
  std::sort(names.begin(), names.end());
  for (const auto& name : names) files[name] = hash_file(out / name);
  manifest["files"] = files;
  Fnv1a fp;
  fp.update_value<std::uint64_t>(g.fingerprint());
  manifest["fingerprint"] = fp.hex();
  write_text_file(out / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "wrote dataset with " << g.num_nodes() << " nodes, " << g.num_relations()
            << " relations to " << out.string() << "\n";
  return 0;
}

void print_dataset_banner(const MultiRelationGraph& g) {
  std::printf("dataset: %ld nodes, %d relations, %ld train / %ld val / %ld test, %ld fraud\n",
              static_cast<long>(g.num_nodes()), g.num_relations(),
              static_cast<long>(g.count_in(Split::train)), static_cast<long>(g.count_in(Split::val)),
              static_cast<long>(g.count_in(Split::test)),
              static_cast<long>(std::count(g.labels.begin(), g.labels.end(), 1)));
}

int cmd_train(const CommonFlags& flags) {
  const Options opts = gather_options(flags);
  const TrainConfig cfg = train_config_from(opts, flags.preset);
  const MultiRelationGraph g = resolve_graph(cfg);
  if (flags.verbosity > 0) print_dataset_banner(g);

  const auto print_epoch = [&](const EpochReport& rep) {
    std::printf("epoch %3d/%d  loss_total=%.6f  loss_gnn=%.6f  loss_sim=%.6f", rep.epoch,
                cfg.epochs, rep.loss_total, rep.loss_gnn, rep.loss_sim);
    if (rep.val_present) std::printf("  val_auc=%.4f  val_f1=%.4f", rep.val.auc, rep.val.f1);
    std::printf("  p=[");
    bool first = true;
    for (const auto& layer : rep.p) {
      for (const double p : layer) {
        std::printf(first ? "%.2f" : " %.2f", p);
        first = false;
      }
    }
    std::printf("]\n");
    std::fflush(stdout);
  };

  const TrainResult result = train(cfg, g, print_epoch);
  const fs::path out(flags.out_dir);
  fs::create_directories(out);
  save_checkpoint(result.trained, out / "checkpoint.json");
  save_train_report(result.reports, out / "train_report.json");
  std::cout << "wrote " << (out / "checkpoint.json").string() << " and "
            << (out / "train_report.json").string() << "\n";
  return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint_path) {
  const TrainedModel trained = load_checkpoint(checkpoint_path);
  TrainConfig cfg = trained.config;
  if (!flags.data_dir.empty()) cfg.dataset_dir = flags.data_dir;
  const MultiRelationGraph g = resolve_graph(cfg);
  const Metrics m = evaluate(trained, g, Split::test);

  nlohmann::json j;
  j["checkpoint"] = checkpoint_path;
  j["split"] = "test";
  j["metrics"] = metrics_to_json(m);
  const fs::path out(flags.out_dir);
  write_text_file(out / "eval_report.json", j.dump(2) + "\n");
  std::printf("test  f1=%.4f recall=%.4f precision=%.4f accuracy=%.4f auc=%.4f\n", m.f1, m.recall,
              m.precision, m.accuracy, m.auc);
  return 0;
}

int cmd_bench(const CommonFlags& flags) {
  const Options opts = gather_options(flags);
  const TrainConfig cfg = train_config_from(opts, flags.preset);
  const MultiRelationGraph g = resolve_graph(cfg);
  if (flags.verbosity > 0) print_dataset_banner(g);

  std::vector<std::uint64_t> seeds = opts.seeds.value_or(std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  std::vector<BaselineKind> kinds;
  if (opts.kinds) {
    for (const auto& name : *opts.kinds) kinds.push_back(baseline_kind_from_string(name));
  } else {
    kinds = all_baseline_kinds();
  }

  const auto runs = run_benchmark(g, cfg, kinds, seeds);
  const auto summary = summarize_benchmark(runs);
  const fs::path out(flags.out_dir);
  write_text_file(out / "bench_report.json", benchmark_json(runs).dump(2) + "\n");
  write_text_file(out / "bench_report.csv", benchmark_csv(runs));
  std::cout << render_benchmark_table(summary);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"fraud-detection GNN with similarity filtering and an RL-tuned threshold"};
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags, eval_flags, bench_flags;
  std::string checkpoint_path;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset directory");
  add_common(gen, gen_flags);
  CLI::App* tr = app.add_subcommand("train", "train a model and write checkpoint + report");
  add_common(tr, train_flags);
  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset's test split");
  add_common(ev, eval_flags);
  ev->add_option("--checkpoint", checkpoint_path, "checkpoint.json path")->required();
  CLI::App* be = app.add_subcommand("bench", "run the baseline/ablation benchmark");
  add_common(be, bench_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_flags);
    if (tr->parsed()) return cmd_train(train_flags);
    if (ev->parsed()) return cmd_eval(eval_flags, checkpoint_path);
    if (be->parsed()) return cmd_bench(bench_flags);
    std::cerr << "no command given\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const StateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace ergnn::cli
