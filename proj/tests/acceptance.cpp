// End-to-end acceptance checks. Each check prints one PASS/FAIL line and the
// process exits with the number of failures, so CI output stays readable.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_check.hpp"
#include "polegrad/backend.hpp"
#include "polegrad/cartpole.hpp"
#include "polegrad/errors.hpp"
#include "polegrad/imagedb.hpp"
#include "polegrad/net.hpp"
#include "polegrad/prototxt.hpp"
#include "polegrad/solver.hpp"
#include "polegrad/trainer.hpp"
#include "testutil.hpp"

using namespace polegrad;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string model_path(const char* name) {
  return std::string(POLEGRAD_MODELS_DIR) + "/" + name;
}

NetDef load_model(const char* name) {
  return prototxt::parse(testutil::read_text(model_path(name)));
}

// ---------------------------------------------------------------------------
// 1. Scalar policy head: score gradient -> injected diff -> weight update.

Outcome check_sigmoid_head_arithmetic() {
  struct Row {
    double aprob;
    int action;
    double dlogp, diff, weight_after, data, result;
  };
  const Row rows[] = {
      {0.0, 1, 0.0, 0.0, 1.0, 0.0, 0.0},
      {0.1, 1, -0.1, 0.1, 0.9, 0.1, 0.09},
      {0.9, 0, 0.1, -0.1, 1.1, 0.9, 0.99},
      {1.0, 0, 0.0, 0.0, 1.0, 1.0, 1.0},
  };
  const double tol = 1e-12;

  const char* net_text = R"(
layer {
  name: "data"
  type: "MemoryData"
  top: "data"
  memory_data_param { batch_size: 1 channels: 1 height: 1 width: 1 }
}
layer {
  name: "ip"
  type: "InnerProduct"
  bottom: "data"
  top: "out"
  inner_product_param { num_output: 1 }
}
)";
  SolverConfig sgd;
  sgd.method = SolverMethod::kSgd;
  sgd.learning_rate = real(1);

  for (const Row& row : rows) {
    const real dlogp = dlogps_sigmoid(row.action, static_cast<real>(row.aprob));
    if (std::abs(dlogp - row.dlogp) > tol) {
      return {false, "score gradient mismatch at aprob " + std::to_string(row.aprob)};
    }

    GradientBatch batch;
    batch.dlogps = {{dlogp}};
    batch.returns = {real(1)};
    const real diff = modulate_gradients(batch, PolicyVariant::kSigmoid)[0][0];
    if (std::abs(diff - row.diff) > tol) {
      return {false, "injected diff mismatch at aprob " + std::to_string(row.aprob)};
    }

    Net net(prototxt::parse(net_text), 0);
    Blob& weight = *net.params()[0];
    weight.data()[0] = real(1);
    weight.diff()[0] = diff;
    Solver solver(sgd);
    solver.apply_update(net);
    if (std::abs(weight.data()[0] - row.weight_after) > tol) {
      return {false, "weight mismatch at aprob " + std::to_string(row.aprob)};
    }

    auto* feed = static_cast<MemoryDataLayer*>(net.find_layer("data"));
    feed->enqueue(std::vector<real>{static_cast<real>(row.data)});
    net.forward();
    if (std::abs(net.blob("out").data()[0] - row.result) > tol) {
      return {false, "forward result mismatch at aprob " + std::to_string(row.aprob)};
    }
  }
  return {true, "4 rows within 1e-12"};
}

// ---------------------------------------------------------------------------
// 2. Distribution policy head: per-weight updates on a diagonal 2x2 model.

Outcome check_softmax_head_arithmetic() {
  struct Row {
    std::array<double, 2> probs;
    int action;
    std::array<double, 2> grad, weight_after, result;
  };
  const Row rows[] = {
      {{0.0, 1.0}, 1, {0.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}},
      {{0.1, 0.9}, 1, {0.1, -0.1}, {0.9, 1.1}, {0.09, 0.99}},
      {{0.9, 0.1}, 0, {-0.1, 0.1}, {1.1, 0.9}, {0.99, 0.09}},
      {{1.0, 0.0}, 0, {0.0, 0.0}, {1.0, 1.0}, {1.0, 0.0}},
  };
  const double tol = 1e-12;

  const char* net_text = R"(
layer {
  name: "data"
  type: "MemoryData"
  top: "data"
  memory_data_param { batch_size: 1 channels: 2 height: 1 width: 1 }
}
layer {
  name: "ip"
  type: "InnerProduct"
  bottom: "data"
  top: "out"
  inner_product_param { num_output: 2 }
}
)";
  SolverConfig sgd;
  sgd.method = SolverMethod::kSgd;
  sgd.learning_rate = real(1);

  for (const Row& row : rows) {
    const std::vector<real> probs{static_cast<real>(row.probs[0]),
                                  static_cast<real>(row.probs[1])};
    const std::vector<real> dlogp = dlogps_softmax(probs, row.action);

    GradientBatch batch;
    batch.dlogps = {dlogp};
    batch.returns = {real(1)};
    const std::vector<real> diff = modulate_gradients(batch, PolicyVariant::kSoftmax)[0];
    for (int i = 0; i < 2; ++i) {
      if (std::abs(diff[i] - row.grad[i]) > tol) {
        return {false, "injected diff mismatch at action " + std::to_string(row.action)};
      }
    }

    // Identity weights, so each output weight multiplies its own input.
    Net net(prototxt::parse(net_text), 0);
    Blob& weight = *net.params()[0];
    weight.data()[0] = real(1);
    weight.data()[1] = real(0);
    weight.data()[2] = real(0);
    weight.data()[3] = real(1);
    weight.diff()[0] = diff[0];
    weight.diff()[3] = diff[1];
    Solver solver(sgd);
    solver.apply_update(net);
    if (std::abs(weight.data()[0] - row.weight_after[0]) > tol ||
        std::abs(weight.data()[3] - row.weight_after[1]) > tol) {
      return {false, "weight mismatch for probs (" + std::to_string(row.probs[0]) +
                         ", " + std::to_string(row.probs[1]) + ")"};
    }

    auto* feed = static_cast<MemoryDataLayer*>(net.find_layer("data"));
    feed->enqueue(probs);
    net.forward();
    const auto out = net.blob("out").data();
    if (std::abs(out[0] - row.result[0]) > tol || std::abs(out[1] - row.result[1]) > tol) {
      return {false, "forward result mismatch for action " + std::to_string(row.action)};
    }
  }
  return {true, "4 rows, both weights, within 1e-12"};
}

// ---------------------------------------------------------------------------
// 3. Finite-difference gradient checks: every layer, then a whole recorded
//    episode's accumulated parameter gradients.

Outcome check_gradients() {
  const auto start = std::chrono::steady_clock::now();
  double worst_layer = 0;

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    LayerSpec ip;
    ip.name = "ip";
    ip.type = LayerType::kInnerProduct;
    ip.bottoms = {"a"};
    ip.tops = {"b"};
    ip.inner_product = InnerProductParam{5, {}};
    auto ip_layer = make_layer(ip);
    worst_layer = std::max(
        worst_layer, testutil::fd_check_layer(*ip_layer, Shape{{3, 1, 1, 4}}, seed));

    LayerSpec relu;
    relu.name = "relu";
    relu.type = LayerType::kRelu;
    relu.bottoms = {"a"};
    relu.tops = {"b"};
    auto relu_layer = make_layer(relu);
    worst_layer = std::max(worst_layer,
                           testutil::fd_check_layer(*relu_layer, Shape{{2, 1, 1, 6}},
                                                    seed, 1e-4, true));

    LayerSpec sigmoid = relu;
    sigmoid.name = "sigmoid";
    sigmoid.type = LayerType::kSigmoid;
    auto sigmoid_layer = make_layer(sigmoid);
    worst_layer = std::max(
        worst_layer, testutil::fd_check_layer(*sigmoid_layer, Shape{{2, 1, 1, 5}}, seed));

    LayerSpec softmax = relu;
    softmax.name = "softmax";
    softmax.type = LayerType::kSoftmax;
    auto softmax_layer = make_layer(softmax);
    worst_layer = std::max(
        worst_layer, testutil::fd_check_layer(*softmax_layer, Shape{{2, 1, 1, 4}}, seed));

    if (worst_layer >= 1e-4) {
      return {false, "layer gradient error " + std::to_string(worst_layer) +
                         " at seed " + std::to_string(seed)};
    }
  }

  // Freeze one episode per head, inject random diffs at the logits, and
  // compare the accumulated parameter gradients against finite differences
  // of the matching scalar objective.
  double worst_episode = 0;
  for (const bool use_softmax : {false, true}) {
    // Seed picked away from ReLU kinks: a hidden pre-activation inside the
    // +/-eps probe window would poison the central difference.
    NetDef def = load_model(use_softmax ? "pg_softmax.prototxt" : "pg_sigmoid.prototxt");
    Net net(def, 2);
    PgTrainer trainer(net,
                      use_softmax ? PolicyVariant::kSoftmax : PolicyVariant::kSigmoid);
    cartpole::CartPole env;
    Rng rng(21);
    Episode episode = trainer.run_episode(env, rng);
    if (episode.steps.size() > 8) episode.steps.resize(8);
    if (episode.steps.empty()) return {false, "episode came back empty"};

    const std::size_t width = use_softmax ? 2 : 1;
    Rng grad_rng(31);
    std::vector<std::vector<real>> injected;
    for (std::size_t t = 0; t < episode.steps.size(); ++t) {
      std::vector<real> g(width);
      for (auto& v : g) v = static_cast<real>(grad_rng.uniform(-1.0, 1.0));
      injected.push_back(std::move(g));
    }

    auto* data = static_cast<MemoryDataLayer*>(net.find_layer("data"));
    const auto objective = [&]() {
      double total = 0;
      for (std::size_t t = 0; t < episode.steps.size(); ++t) {
        const auto& s = episode.steps[t].state;
        data->enqueue(std::vector<real>{s.x, s.x_dot, s.theta, s.theta_dot});
        net.forward();
        const auto logits = net.blob(trainer.logit_blob()).data();
        for (std::size_t j = 0; j < width; ++j) {
          total += static_cast<double>(injected[t][j]) * static_cast<double>(logits[j]);
        }
      }
      return total;
    };

    for (Blob* p : net.params()) p->zero_diff();
    for (std::size_t t = 0; t < episode.steps.size(); ++t) {
      trainer.accumulate_step(episode.steps[t], injected[t]);
    }

    const double eps = 1e-4;
    for (Blob* p : net.params()) {
      for (std::size_t i = 0; i < p->count(); ++i) {
        const real saved = p->data()[i];
        p->data()[i] = saved + static_cast<real>(eps);
        const double plus = objective();
        p->data()[i] = saved - static_cast<real>(eps);
        const double minus = objective();
        p->data()[i] = saved;
        const double numeric = (plus - minus) / (2 * eps);
        const double analytic = static_cast<double>(p->diff()[i]);
        worst_episode =
            std::max(worst_episode, testutil::relative_error(analytic, numeric));
      }
    }
  }

  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << "layer max rel err " << worst_layer << " (< 1e-4, 20 seeds), episode max "
         << worst_episode << " (< 1e-3), " << elapsed << "s (< 30s)";
  return {worst_layer < 1e-4 && worst_episode < 1e-3 && elapsed < 30.0, detail.str()};
}

// ---------------------------------------------------------------------------
// 4. Cart-pole training reaches long balancing episodes.

struct LearningResult {
  bool reached = false;
  int episode = -1;  // first episode where the bar was met
  int longest = 0;
};

LearningResult train_until_bar(const char* model_name, PolicyVariant variant,
                               std::uint64_t seed) {
  NetDef def = load_model(model_name);
  Net net(def, seed);
  PgTrainer trainer(net, variant);
  cartpole::CartPole env;

  TrainerConfig config;
  config.variant = variant;
  config.gamma = real(0.99);
  config.episodes_per_batch = 10;
  config.normalize_returns = true;
  config.max_episodes = 10000;
  config.seed = seed;

  SolverConfig solver;
  solver.method = SolverMethod::kRmsProp;
  solver.learning_rate = real(1e-3);

  LearningResult result;
  std::deque<int> window;
  long long window_sum = 0;
  trainer.train(env, solver, config, [&](const EpisodeStats& stats) {
    result.longest = std::max(result.longest, stats.length);
    window.push_back(stats.length);
    window_sum += stats.length;
    if (window.size() > 100) {
      window_sum -= window.front();
      window.pop_front();
    }
    const bool long_mean =
        window.size() == 100 && window_sum >= 100ll * 500;
    if (long_mean && result.longest >= 3000) {
      result.reached = true;
      result.episode = stats.episode;
      return false;
    }
    return true;
  });
  return result;
}

Outcome check_cartpole_learning() {
  const std::uint64_t seeds[] = {1, 2, 3};
  std::ostringstream detail;
  bool all_pass = true;

  const struct {
    const char* label;
    const char* model;
    PolicyVariant variant;
  } variants[] = {
      {"sigmoid", "pg_sigmoid.prototxt", PolicyVariant::kSigmoid},
      {"softmax", "pg_softmax.prototxt", PolicyVariant::kSoftmax},
  };

  for (const auto& v : variants) {
    int reached = 0;
    std::ostringstream per_seed;
    for (const std::uint64_t seed : seeds) {
      const LearningResult r = train_until_bar(v.model, v.variant, seed);
      if (r.reached) ++reached;
      per_seed << " seed" << seed << (r.reached ? "@ep" + std::to_string(r.episode)
                                                : " missed(max " +
                                                      std::to_string(r.longest) + ")");
    }
    if (reached < 2) all_pass = false;
    detail << v.label << " " << reached << "/3 [" << per_seed.str() << " ] ";
  }
  detail << "(bar: mean length over last 100 >= 500 and one episode >= 3000, "
            "within 10000 episodes, >= 2 of 3 seeds per head)";
  return {all_pass, detail.str()};
}

// ---------------------------------------------------------------------------
// 5. Model files survive parse -> print -> parse unchanged.

Outcome check_prototxt_round_trip() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::filesystem::path> files;
  for (const char* dir : {POLEGRAD_CORPUS_DIR, POLEGRAD_MODELS_DIR}) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() == ".prototxt") files.push_back(entry.path());
    }
  }
  if (files.size() < 10) {
    return {false, "only " + std::to_string(files.size()) + " corpus files, need 10"};
  }

  for (const auto& file : files) {
    std::vector<std::string> warnings;
    const NetDef first = prototxt::parse(testutil::read_text(file), &warnings);
    const std::string printed = prototxt::print(first);
    const NetDef second = prototxt::parse(printed, &warnings);
    if (!(second == first)) {
      return {false, "round trip changed " + file.filename().string()};
    }
    if (prototxt::print(second) != printed) {
      return {false, "printing is not a fixpoint for " + file.filename().string()};
    }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << files.size() << " files in " << elapsed << "s (< 1s)";
  return {elapsed < 1.0, detail.str()};
}

// ---------------------------------------------------------------------------
// 6. Sampler statistics under skew and under boosts.

Outcome check_sampler_statistics() {
  const auto start = std::chrono::steady_clock::now();
  const int draws = 100000;

  imagedb::Dataset skewed;
  for (int i = 0; i < 90; ++i) {
    imagedb::Entry e;
    e.id = i;
    e.label = 0;
    e.dims = {1, 1, 1};
    e.tensor = {real(0)};
    skewed.add(std::move(e));
  }
  for (int i = 90; i < 100; ++i) {
    imagedb::Entry e;
    e.id = i;
    e.label = 1;
    e.dims = {1, 1, 1};
    e.tensor = {real(1)};
    skewed.add(std::move(e));
  }
  Rng rng(404);
  int minority = 0;
  for (int i = 0; i < draws; ++i) {
    minority +=
        skewed.sample(imagedb::SampleMethod::kLabelBalanced, false, rng).label == 1;
  }
  const double minority_freq = static_cast<double>(minority) / draws;

  imagedb::Dataset boosted;
  for (int i = 0; i < 4; ++i) {
    imagedb::Entry e;
    e.id = i;
    e.label = 0;
    e.boost = i == 0 ? real(3) : real(1);
    e.dims = {1, 1, 1};
    e.tensor = {real(i)};
    boosted.add(std::move(e));
  }
  Rng rng2(505);
  int heavy = 0;
  for (int i = 0; i < draws; ++i) {
    heavy += boosted.sample(imagedb::SampleMethod::kUniform, true, rng2).id == 0;
  }
  const double heavy_freq = static_cast<double>(heavy) / draws;

  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << "minority " << minority_freq << " (0.50 +/- 0.02), boosted entry "
         << heavy_freq << " (0.50 +/- 0.02), " << elapsed << "s (< 5s)";
  const bool pass = std::abs(minority_freq - 0.5) <= 0.02 &&
                    std::abs(heavy_freq - 0.5) <= 0.02 && elapsed < 5.0;
  return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// 7. Cart-pole dynamics against hand-computed values plus mirror symmetry.

Outcome check_dynamics() {
  cartpole::CartPole env;
  const cartpole::State rest{0, 0, 0, 0};

  const cartpole::StepResult push = env.step(rest, 1);
  const double tol = 1e-6;
  if (std::abs(push.state.x - 0.0) > tol ||
      std::abs(push.state.x_dot - 0.19512195) > tol ||
      std::abs(push.state.theta - 0.0) > tol ||
      std::abs(push.state.theta_dot - -0.29268293) > tol) {
    return {false, "push-right step deviates from the hand-computed state"};
  }
  const cartpole::StepResult pull = env.step(rest, 0);
  if (std::abs(pull.state.x_dot + 0.19512195) > tol ||
      std::abs(pull.state.theta_dot - 0.29268293) > tol) {
    return {false, "push-left step deviates from the hand-computed state"};
  }

  Rng rng(77);
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    cartpole::State s;
    s.x = static_cast<real>(rng.uniform(-2.0, 2.0));
    s.x_dot = static_cast<real>(rng.uniform(-3.0, 3.0));
    s.theta = static_cast<real>(rng.uniform(-0.3, 0.3));
    s.theta_dot = static_cast<real>(rng.uniform(-3.0, 3.0));
    const cartpole::State neg{-s.x, -s.x_dot, -s.theta, -s.theta_dot};
    for (int action : {0, 1}) {
      const auto a = env.step(s, action);
      const auto b = env.step(neg, 1 - action);
      worst = std::max({worst, std::abs(double(a.state.x + b.state.x)),
                        std::abs(double(a.state.x_dot + b.state.x_dot)),
                        std::abs(double(a.state.theta + b.state.theta)),
                        std::abs(double(a.state.theta_dot + b.state.theta_dot))});
      if (a.done != b.done || a.reward != b.reward) {
        return {false, "mirrored step disagrees on termination"};
      }
    }
  }
  std::ostringstream detail;
  detail << "hand values within 1e-6, mirror asymmetry " << worst << " (<= 1e-12)";
  return {worst <= 1e-12, detail.str()};
}

// ---------------------------------------------------------------------------
// 8. The training CLI is deterministic for a fixed seed.

Outcome check_cli_determinism() {
  testutil::TempDir dir;
  const struct {
    const char* variant;
    const char* model;
  } variants[] = {
      {"sigmoid", "pg_sigmoid.prototxt"},
      {"softmax", "pg_softmax.prototxt"},
  };

  for (const auto& v : variants) {
    const std::string base = std::string(POLEGRAD_CLI_PATH) + " train-rl --variant " +
                             v.variant + " --model " +
                             testutil::quoted(model_path(v.model)) +
                             " --episodes 200 --seed 0 --out ";
    const auto first_path = dir.file(std::string(v.variant) + "_a.csv");
    const auto second_path = dir.file(std::string(v.variant) + "_b.csv");
    const auto first = testutil::run_command(base + testutil::quoted(first_path));
    const auto second = testutil::run_command(base + testutil::quoted(second_path));
    if (first.exit_code != 0 || second.exit_code != 0) {
      return {false, std::string(v.variant) + " run failed: " + first.output +
                         second.output};
    }
    const std::string a = testutil::read_text(first_path);
    const std::string b = testutil::read_text(second_path);
    if (a.empty() || a != b) {
      return {false, std::string(v.variant) + " runs differ across invocations"};
    }
    if (a.rfind("episode,length,mean_return_last_100\n", 0) != 0) {
      return {false, std::string(v.variant) + " stats file missing its header"};
    }
  }
  return {true, "two 200-episode runs byte-identical per head"};
}

// ---------------------------------------------------------------------------
// 9. Benchmark output is sane and the dispatch table changes nothing.

Outcome check_bench_and_dispatch() {
  const std::string cmd = std::string(POLEGRAD_CLI_PATH) + " bench --model " +
                          testutil::quoted(model_path("pg_sigmoid.prototxt")) +
                          " --iters 20 --seed 3";
  const auto result = testutil::run_command(cmd);
  if (result.exit_code != 0) return {false, "bench exited " + std::to_string(result.exit_code)};

  std::istringstream out(result.output);
  std::string header, row;
  std::getline(out, header);
  std::getline(out, row);
  if (header.find("Fwd/Bwd Average Time (ms.)") == std::string::npos) {
    return {false, "unexpected bench header: " + header};
  }
  std::istringstream fields(row);
  std::string model, input;
  int batch = 0;
  double ms = -1;
  fields >> model >> input >> batch >> ms;
  if (model != "pg_sigmoid" || input != "4x1x1" || batch != 1) {
    return {false, "unexpected bench row: " + row};
  }
  if (!(ms > 0) || !std::isfinite(ms)) {
    return {false, "non-positive timing: " + std::to_string(ms)};
  }

  // Every kernel must behave identically through the dispatch table.
  Registry direct, routed;
  Rng fill_rng(88);
  const int m = 5, n = 4, k = 3;
  std::vector<real> av(static_cast<std::size_t>(m) * k), bv(static_cast<std::size_t>(k) * n);
  for (auto& v : av) v = static_cast<real>(fill_rng.uniform(-1.0, 1.0));
  for (auto& v : bv) v = static_cast<real>(fill_rng.uniform(-1.0, 1.0));

  const auto run_direct = [&]() {
    Handle a = direct.alloc_buffer(av.size());
    Handle b = direct.alloc_buffer(bv.size());
    Handle c = direct.alloc_buffer(static_cast<std::size_t>(m) * n);
    Handle r = direct.create_rng(12);
    direct.write(a, av);
    direct.write(b, bv);
    kernels::gemm(direct, false, false, m, n, k, real(1.25), a, b, real(0), c);
    kernels::scal(direct, av.size(), real(0.5), a);
    kernels::axpy(direct, av.size(), real(2), a, a);
    kernels::fill(direct, b, bv.size(), real(7));
    kernels::copy(direct, c, c, static_cast<std::size_t>(m) * n);
    kernels::rng_uniform(direct, r, b, bv.size(), real(-3), real(3));
    const real d = kernels::dot(direct, av.size(), a, a);
    auto out = direct.read(c);
    auto noise = direct.read(b);
    out.insert(out.end(), noise.begin(), noise.end());
    out.push_back(d);
    auto scaled = direct.read(a);
    out.insert(out.end(), scaled.begin(), scaled.end());
    return out;
  };
  const auto run_routed = [&]() {
    Handle a = routed.alloc_buffer(av.size());
    Handle b = routed.alloc_buffer(bv.size());
    Handle c = routed.alloc_buffer(static_cast<std::size_t>(m) * n);
    Handle r = routed.create_rng(12);
    routed.write(a, av);
    routed.write(b, bv);
    const auto id = [](Handle h) { return static_cast<real>(h.id); };
    routed.dispatch(fn::kGemm, std::vector<real>{0, 0, real(m), real(n), real(k),
                                                 real(1.25), id(a), id(b), 0, id(c)});
    routed.dispatch(fn::kScal, std::vector<real>{real(av.size()), real(0.5), id(a)});
    routed.dispatch(fn::kAxpy, std::vector<real>{real(av.size()), real(2), id(a), id(a)});
    routed.dispatch(fn::kFill, std::vector<real>{id(b), real(bv.size()), real(7)});
    routed.dispatch(fn::kCopy,
                    std::vector<real>{id(c), id(c), real(static_cast<std::size_t>(m) * n)});
    routed.dispatch(fn::kRngUniform,
                    std::vector<real>{id(r), id(b), real(bv.size()), real(-3), real(3)});
    const auto d = routed.dispatch(
        fn::kDot, std::vector<real>{real(av.size()), id(a), id(a)});
    auto out = routed.read(c);
    auto noise = routed.read(b);
    out.insert(out.end(), noise.begin(), noise.end());
    out.push_back(d.at(0));
    auto scaled = routed.read(a);
    out.insert(out.end(), scaled.begin(), scaled.end());
    return out;
  };

  const auto want = run_direct();
  const auto got = run_routed();
  if (want.size() != got.size() ||
      std::memcmp(want.data(), got.data(), want.size() * sizeof(real)) != 0) {
    return {false, "dispatch results differ from direct kernel calls"};
  }

  std::ostringstream detail;
  detail << "timing " << ms << " ms, 7 kernels bit-identical through dispatch";
  return {true, detail.str()};
}

}  // namespace

int main() {
  const struct {
    const char* name;
    std::function<Outcome()> run;
  } criteria[] = {
      {"scalar policy head worked-example arithmetic", check_sigmoid_head_arithmetic},
      {"distribution policy head worked-example arithmetic",
       check_softmax_head_arithmetic},
      {"finite-difference gradient checks", check_gradients},
      {"cart-pole policies learn to balance", check_cartpole_learning},
      {"model files round-trip through the parser", check_prototxt_round_trip},
      {"sampler statistics match their design", check_sampler_statistics},
      {"cart-pole dynamics match hand-computed values", check_dynamics},
      {"training CLI is deterministic per seed", check_cli_determinism},
      {"benchmark output and dispatch equivalence", check_bench_and_dispatch},
  };

  int failures = 0;
  int index = 0;
  for (const auto& criterion : criteria) {
    ++index;
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::printf("%s %d/9 %s: %s\n", outcome.pass ? "PASS" : "FAIL", index,
                criterion.name, outcome.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
