#pragma once

#include <vector>

#include "polegrad/net.hpp"
#include "polegrad/types.hpp"

namespace polegrad {

enum class SolverMethod { kSgd, kRmsProp };

struct SolverConfig {
  SolverMethod method = SolverMethod::kRmsProp;
  real learning_rate = real(1e-3);
  real rms_decay = real(0.99);
  real epsilon = real(1e-8);
};

// Applies accumulated parameter gradients and zeroes them. RMSProp keeps its
// per-element cache here, so one Solver instance must span a training run.
class Solver {
 public:
  explicit Solver(const SolverConfig& config);

  const SolverConfig& config() const { return config_; }

  // sgd:     w -= lr * diff
  // rmsprop: cache = decay * cache + (1 - decay) * diff^2
  //          w -= lr * diff / (sqrt(cache) + epsilon)
  // Every parameter diff is zero afterwards.
  void apply_update(Net& net);

 private:
  SolverConfig config_;
  std::vector<std::vector<real>> cache_;
};

// True when every parameter gradient in the net is exactly zero.
bool diffs_are_zeroed(const Net& net);

}  // namespace polegrad
