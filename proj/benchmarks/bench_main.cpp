#include <cstdint>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "polegrad/backend.hpp"
#include "polegrad/net.hpp"
#include "polegrad/prototxt.hpp"

namespace {

using namespace polegrad;

void BM_Gemm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Registry reg;
  Handle a = reg.alloc_buffer(static_cast<std::size_t>(n) * n);
  Handle b = reg.alloc_buffer(static_cast<std::size_t>(n) * n);
  Handle c = reg.alloc_buffer(static_cast<std::size_t>(n) * n);
  Handle rng = reg.create_rng(7);
  kernels::rng_uniform(reg, rng, a, static_cast<std::size_t>(n) * n, -1, 1);
  kernels::rng_uniform(reg, rng, b, static_cast<std::size_t>(n) * n, -1, 1);
  for (auto _ : state) {
    kernels::gemm(reg, false, false, n, n, n, 1, a, b, 0, c);
    benchmark::DoNotOptimize(reg.buffer(c).data());
  }
  state.SetItemsProcessed(state.iterations() * 2ll * n * n * n);
}
BENCHMARK(BM_Gemm)->Arg(16)->Arg(64)->Arg(128);

std::string policy_model(int hidden, int out) {
  std::string text;
  text += "name: \"bench\"\n";
  text += "layer { name: \"data\" type: \"MemoryData\" top: \"data\" ";
  text += "memory_data_param { batch_size: 1 channels: 4 height: 1 width: 1 } }\n";
  text += "layer { name: \"ip1\" type: \"InnerProduct\" bottom: \"data\" top: \"h\" ";
  text += "inner_product_param { num_output: " + std::to_string(hidden) + " } }\n";
  text += "layer { name: \"relu1\" type: \"ReLU\" bottom: \"h\" top: \"h2\" }\n";
  text += "layer { name: \"ip2\" type: \"InnerProduct\" bottom: \"h2\" top: \"logits\" ";
  text += "inner_product_param { num_output: " + std::to_string(out) + " } }\n";
  text += "layer { name: \"prob\" type: \"Softmax\" bottom: \"logits\" top: \"prob\" }\n";
  text += "layer { name: \"loss\" type: \"MemoryLoss\" bottom: \"prob\" }\n";
  return text;
}

void feed(Net& net, Rng& rng) {
  auto* data = static_cast<MemoryDataLayer*>(net.find_layer("data"));
  std::vector<real> sample(data->sample_size());
  for (auto& v : sample) v = static_cast<real>(rng.uniform(-1.0, 1.0));
  data->enqueue(sample);
}

void BM_NetForward(benchmark::State& state) {
  const NetDef def = prototxt::parse(policy_model(static_cast<int>(state.range(0)), 2));
  Net net(def, 1);
  Rng rng(2);
  for (auto _ : state) {
    feed(net, rng);
    auto out = net.forward();
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_NetForward)->Arg(10)->Arg(200);

void BM_NetForwardBackward(benchmark::State& state) {
  const NetDef def = prototxt::parse(policy_model(static_cast<int>(state.range(0)), 2));
  Net net(def, 1);
  Rng rng(2);
  for (auto _ : state) {
    feed(net, rng);
    net.forward();
    net.backward();
    benchmark::DoNotOptimize(net.blob("data").diff().data());
  }
}
BENCHMARK(BM_NetForwardBackward)->Arg(10)->Arg(200);

void BM_PrototxtParse(benchmark::State& state) {
  const std::string text = policy_model(10, 2);
  for (auto _ : state) {
    NetDef def = prototxt::parse(text);
    benchmark::DoNotOptimize(def);
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_PrototxtParse);

void BM_PrototxtRoundTrip(benchmark::State& state) {
  const NetDef def = prototxt::parse(policy_model(10, 2));
  for (auto _ : state) {
    std::string out = prototxt::print(def);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_PrototxtRoundTrip);

}  // namespace

BENCHMARK_MAIN();
