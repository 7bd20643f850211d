// polegrad command line: train policy-gradient cart-pole agents, run small
// supervised loops on image datasets, format/check model files, inspect
// datasets, and time forward/backward passes.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polegrad/cartpole.hpp"
#include "polegrad/errors.hpp"
#include "polegrad/imagedb.hpp"
#include "polegrad/net.hpp"
#include "polegrad/prototxt.hpp"
#include "polegrad/solver.hpp"
#include "polegrad/trainer.hpp"

namespace pg = polegrad;

namespace {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw pg::NotFound("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

pg::NetDef load_model(const std::filesystem::path& path) {
  return pg::prototxt::parse(read_text_file(path));
}

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

// Writes to the path when given, stdout otherwise.
class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) {
        throw pg::InvalidArgument("cannot open output file " + path);
      }
    }
  }

  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// ---------------------------------------------------------------------------
// train-rl

struct TrainRlArgs {
  std::string variant;
  std::string model_path;
  int episodes = 1000;
  int batch_episodes = 10;
  double gamma = 0.99;
  double lr = 1e-3;
  bool no_normalize = false;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string weights_out;
};

int run_train_rl(const TrainRlArgs& args) {
  const pg::NetDef def = load_model(args.model_path);
  pg::Net net(def, args.seed);
  const pg::PolicyVariant variant = args.variant == "sigmoid"
                                        ? pg::PolicyVariant::kSigmoid
                                        : pg::PolicyVariant::kSoftmax;
  pg::PgTrainer trainer(net, variant);

  pg::TrainerConfig config;
  config.variant = variant;
  config.gamma = static_cast<pg::real>(args.gamma);
  config.episodes_per_batch = args.batch_episodes;
  config.normalize_returns = !args.no_normalize;
  config.max_episodes = args.episodes;
  config.seed = args.seed;

  pg::SolverConfig solver_config;
  solver_config.method = pg::SolverMethod::kRmsProp;
  solver_config.learning_rate = static_cast<pg::real>(args.lr);

  OutputSink sink(args.out_path);
  sink.stream() << "episode,length,mean_return_last_100\n";

  const pg::cartpole::CartPole env;
  trainer.train(env, solver_config, config, [&](const pg::EpisodeStats& stats) {
    sink.stream() << stats.episode << "," << stats.length << ","
                  << format_real(stats.mean_return_last_100) << "\n";
    return true;
  });
  sink.stream().flush();

  if (!args.weights_out.empty()) {
    const std::vector<std::uint8_t> bytes = net.snapshot_weights();
    std::ofstream weights(args.weights_out, std::ios::binary);
    if (!weights) {
      throw pg::InvalidArgument("cannot open output file " + args.weights_out);
    }
    weights.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// train-sl

struct TrainSlArgs {
  std::string model_path;
  std::string index_path;
  int iters = 100;
  double lr = 0.1;
  std::string method = "sgd";
  std::uint64_t seed = 0;
  std::string out_path;
};

int run_train_sl(const TrainSlArgs& args) {
  const pg::NetDef def = load_model(args.model_path);
  const pg::imagedb::Dataset dataset = pg::imagedb::load(args.index_path);
  if (dataset.empty()) {
    throw pg::InvalidArgument("train-sl: dataset is empty");
  }
  pg::Net net(def, args.seed);

  pg::MemoryDataLayer* data_layer = nullptr;
  const pg::LayerSpec* softmax_spec = nullptr;
  for (const auto& layer : net.layers()) {
    if (layer->type() == pg::LayerType::kMemoryData && data_layer == nullptr) {
      data_layer = static_cast<pg::MemoryDataLayer*>(layer.get());
    }
    if (layer->type() == pg::LayerType::kSoftmax && softmax_spec == nullptr) {
      softmax_spec = &layer->spec();
    }
  }
  if (data_layer == nullptr) {
    throw pg::InvalidArgument("train-sl: model has no MemoryData layer");
  }
  if (softmax_spec == nullptr) {
    throw pg::InvalidArgument("train-sl: model has no Softmax layer");
  }
  if (data_layer->spec().memory_data->batch_size != 1) {
    throw pg::InvalidArgument("train-sl: MemoryData batch_size must be 1");
  }
  pg::Blob& probs = net.blob(softmax_spec->tops[0]);
  pg::Blob& logits = net.blob(softmax_spec->bottoms[0]);
  const int width = static_cast<int>(logits.count());

  for (const auto& [label, ids] : dataset.groups()) {
    if (label < 0 || label >= width) {
      throw pg::InvalidArgument("train-sl: dataset label " + std::to_string(label) +
                                " out of range for a width-" + std::to_string(width) +
                                " model");
    }
  }
  for (const auto& [label, ids] : dataset.groups()) {
    for (std::int64_t id : ids) {
      if (dataset.entry(id).tensor.size() != data_layer->sample_size()) {
        throw pg::InvalidArgument(
            "train-sl: entry " + std::to_string(id) + " holds " +
            std::to_string(dataset.entry(id).tensor.size()) + " values, model expects " +
            std::to_string(data_layer->sample_size()));
      }
    }
  }

  pg::SolverConfig solver_config;
  solver_config.method = args.method == "rmsprop" ? pg::SolverMethod::kRmsProp
                                                  : pg::SolverMethod::kSgd;
  solver_config.learning_rate = static_cast<pg::real>(args.lr);
  pg::Solver solver(solver_config);
  pg::Rng rng(args.seed);

  auto predict = [&](const pg::imagedb::Entry& entry) {
    data_layer->enqueue(entry.tensor);
    net.forward();
    auto p = probs.data();
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  };

  OutputSink sink(args.out_path);
  sink.stream() << "iter,accuracy\n";
  for (int iter = 1; iter <= args.iters; ++iter) {
    const pg::imagedb::Entry& entry =
        dataset.sample(pg::imagedb::SampleMethod::kLabelBalanced, false, rng);
    data_layer->enqueue(entry.tensor);
    net.forward();

    std::vector<pg::real> target(static_cast<std::size_t>(width), pg::real(0));
    target[static_cast<std::size_t>(entry.label)] = pg::real(1);
    auto p = probs.data();
    const std::vector<pg::real> grad = pg::softmax_xent_gradient(
        std::vector<pg::real>(p.begin(), p.end()), target);
    auto logit_diff = logits.diff();
    std::copy(grad.begin(), grad.end(), logit_diff.begin());
    net.backward_from(logits.name());
    solver.apply_update(net);

    int correct = 0;
    int total = 0;
    for (const auto& [label, ids] : dataset.groups()) {
      for (std::int64_t id : ids) {
        correct += predict(dataset.entry(id)) == label ? 1 : 0;
        ++total;
      }
    }
    sink.stream() << iter << ","
                  << format_real(static_cast<double>(correct) / total) << "\n";
  }
  sink.stream().flush();
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string model_path;
  int iters = 100;
  std::uint64_t seed = 0;
};

int run_bench(const BenchArgs& args) {
  if (args.iters < 1) {
    throw pg::InvalidArgument("bench: --iters must be >= 1");
  }
  const pg::NetDef def = load_model(args.model_path);
  pg::Net net(def, args.seed);

  pg::MemoryDataLayer* data_layer = nullptr;
  for (const auto& layer : net.layers()) {
    if (layer->type() == pg::LayerType::kMemoryData) {
      data_layer = static_cast<pg::MemoryDataLayer*>(layer.get());
      break;
    }
  }

  pg::Rng rng(args.seed);
  std::vector<pg::real> sample;
  int batch_size = 1;
  std::string input_size = "-";
  if (data_layer != nullptr) {
    const auto& p = *data_layer->spec().memory_data;
    batch_size = p.batch_size;
    input_size = std::to_string(p.channels) + "x" + std::to_string(p.height) + "x" +
                 std::to_string(p.width);
    sample.resize(data_layer->sample_size());
  }

  auto pass = [&]() {
    if (data_layer != nullptr) {
      for (int b = 0; b < batch_size; ++b) {
        for (auto& v : sample) v = static_cast<pg::real>(rng.uniform(-1.0, 1.0));
        data_layer->enqueue(sample);
      }
    }
    net.forward();
    net.backward();
  };

  for (int i = 0; i < 5; ++i) pass();

  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < args.iters; ++i) pass();
  const auto stop = std::chrono::steady_clock::now();
  const double total_ms =
      std::chrono::duration<double, std::milli>(stop - start).count();
  const double avg_ms = total_ms / args.iters;

  std::string model_name = def.name.value_or("");
  if (model_name.empty()) {
    model_name = std::filesystem::path(args.model_path).stem().string();
  }

  std::printf("%-24s %-12s %-12s %s\n", "Model", "Input Size", "Batch Size",
              "Fwd/Bwd Average Time (ms.)");
  std::printf("%-24s %-12s %-12d %.4f\n", model_name.c_str(), input_size.c_str(),
              batch_size, avg_ms);
  return 0;
}

// ---------------------------------------------------------------------------
// proto fmt / proto check

int run_proto_fmt(const std::string& path) {
  const pg::NetDef def = load_model(path);
  std::cout << pg::prototxt::print(def);
  return 0;
}

int run_proto_check(const std::string& path) {
  const pg::NetDef def = load_model(path);
  pg::Net net(def, 0);
  std::cout << "name: " << def.name.value_or("(unnamed)") << "\n";
  std::cout << "layers: " << def.layers.size() << "\n";
  for (const auto& [blob_name, shape] : net.blob_shapes()) {
    std::cout << blob_name << " " << pg::to_string(shape) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// db stats / db sample

int run_db_stats(const std::string& index_path) {
  const pg::imagedb::Dataset dataset = pg::imagedb::load(index_path);
  std::cout << "entries: " << dataset.size() << "\n";
  for (const auto& [label, ids] : dataset.groups()) {
    std::cout << "label " << label << ": " << ids.size() << "\n";
  }
  return 0;
}

struct DbSampleArgs {
  std::string index_path;
  std::string method = "label_balanced";
  int draws = 100000;
  bool use_boost = false;
  std::uint64_t seed = 0;
};

int run_db_sample(const DbSampleArgs& args) {
  if (args.draws < 1) {
    throw pg::InvalidArgument("db sample: --draws must be >= 1");
  }
  const pg::imagedb::Dataset dataset = pg::imagedb::load(args.index_path);
  const pg::imagedb::SampleMethod method =
      args.method == "uniform" ? pg::imagedb::SampleMethod::kUniform
                               : pg::imagedb::SampleMethod::kLabelBalanced;
  pg::Rng rng(args.seed);
  std::map<int, int> counts;
  for (int i = 0; i < args.draws; ++i) {
    counts[dataset.sample(method, args.use_boost, rng).label]++;
  }
  for (const auto& [label, count] : counts) {
    std::cout << "label " << label << ": "
              << format_real(static_cast<double>(count) / args.draws) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tiny CPU net framework with a policy-gradient cart-pole trainer"};
  app.require_subcommand(1);

  TrainRlArgs train_rl;
  CLI::App* train_rl_cmd =
      app.add_subcommand("train-rl", "train a cart-pole policy with REINFORCE");
  train_rl_cmd->add_option("--variant", train_rl.variant, "policy head: sigmoid|softmax")
      ->required()
      ->check(CLI::IsMember({"sigmoid", "softmax"}));
  train_rl_cmd->add_option("--model", train_rl.model_path, "model prototxt")->required();
  train_rl_cmd->add_option("--episodes", train_rl.episodes, "episodes to run")
      ->check(CLI::NonNegativeNumber);
  train_rl_cmd->add_option("--batch-episodes", train_rl.batch_episodes,
                           "episodes per parameter update");
  train_rl_cmd->add_option("--gamma", train_rl.gamma, "reward discount");
  train_rl_cmd->add_option("--lr", train_rl.lr, "learning rate");
  train_rl_cmd->add_flag("--no-normalize", train_rl.no_normalize,
                         "skip return standardization");
  train_rl_cmd->add_option("--seed", train_rl.seed, "rng seed");
  train_rl_cmd->add_option("--out", train_rl.out_path, "statistics csv path");
  train_rl_cmd->add_option("--weights-out", train_rl.weights_out,
                           "final weight snapshot path");

  TrainSlArgs train_sl;
  CLI::App* train_sl_cmd =
      app.add_subcommand("train-sl", "supervised training on an image dataset");
  train_sl_cmd->add_option("--model", train_sl.model_path, "model prototxt")->required();
  train_sl_cmd->add_option("--index", train_sl.index_path, "dataset index file")
      ->required();
  train_sl_cmd->add_option("--iters", train_sl.iters, "training iterations")
      ->check(CLI::PositiveNumber);
  train_sl_cmd->add_option("--lr", train_sl.lr, "learning rate");
  train_sl_cmd->add_option("--method", train_sl.method, "solver: sgd|rmsprop")
      ->check(CLI::IsMember({"sgd", "rmsprop"}));
  train_sl_cmd->add_option("--seed", train_sl.seed, "rng seed");
  train_sl_cmd->add_option("--out", train_sl.out_path, "statistics csv path");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "time forward+backward passes");
  bench_cmd->add_option("--model", bench.model_path, "model prototxt")->required();
  bench_cmd->add_option("--iters", bench.iters, "timed passes");
  bench_cmd->add_option("--seed", bench.seed, "rng seed");

  CLI::App* proto_cmd = app.add_subcommand("proto", "model file utilities");
  proto_cmd->require_subcommand(1);
  std::string proto_file;
  CLI::App* proto_fmt_cmd =
      proto_cmd->add_subcommand("fmt", "print the canonical form");
  proto_fmt_cmd->add_option("file", proto_file, "model prototxt")->required();
  CLI::App* proto_check_cmd =
      proto_cmd->add_subcommand("check", "build the net and report blob shapes");
  proto_check_cmd->add_option("file", proto_file, "model prototxt")->required();

  CLI::App* db_cmd = app.add_subcommand("db", "dataset utilities");
  db_cmd->require_subcommand(1);
  std::string db_index;
  CLI::App* db_stats_cmd = db_cmd->add_subcommand("stats", "per-label entry counts");
  db_stats_cmd->add_option("index", db_index, "dataset index file")->required();
  DbSampleArgs db_sample;
  CLI::App* db_sample_cmd =
      db_cmd->add_subcommand("sample", "empirical label frequencies");
  db_sample_cmd->add_option("index", db_sample.index_path, "dataset index file")
      ->required();
  db_sample_cmd->add_option("--method", db_sample.method,
                            "sampling method: uniform|label_balanced")
      ->check(CLI::IsMember({"uniform", "label_balanced"}));
  db_sample_cmd->add_option("--draws", db_sample.draws, "number of draws");
  db_sample_cmd->add_flag("--use-boost", db_sample.use_boost, "weight draws by boost");
  db_sample_cmd->add_option("--seed", db_sample.seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(train_rl_cmd)) return run_train_rl(train_rl);
    if (app.got_subcommand(train_sl_cmd)) return run_train_sl(train_sl);
    if (app.got_subcommand(bench_cmd)) return run_bench(bench);
    if (app.got_subcommand(proto_cmd)) {
      if (proto_cmd->got_subcommand(proto_fmt_cmd)) return run_proto_fmt(proto_file);
      return run_proto_check(proto_file);
    }
    if (app.got_subcommand(db_cmd)) {
      if (db_cmd->got_subcommand(db_stats_cmd)) return run_db_stats(db_index);
      return run_db_sample(db_sample);
    }
  } catch (const pg::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pg::InvalidState& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
