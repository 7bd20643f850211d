#include "polegrad/solver.hpp"

#include <cmath>
#include <string>

#include "polegrad/errors.hpp"

namespace polegrad {

Solver::Solver(const SolverConfig& config) : config_(config) {
  if (!(config_.learning_rate > real(0))) {
    throw InvalidArgument("solver: learning_rate must be > 0");
  }
  if (config_.method == SolverMethod::kRmsProp) {
    if (!(config_.rms_decay >= real(0)) || !(config_.rms_decay < real(1))) {
      throw InvalidArgument("solver: rms_decay must be in [0, 1)");
    }
    if (!(config_.epsilon > real(0))) {
      throw InvalidArgument("solver: epsilon must be > 0");
    }
  }
}

void Solver::apply_update(Net& net) {
  const auto& params = net.params();
  if (config_.method == SolverMethod::kRmsProp && cache_.size() != params.size()) {
    if (!cache_.empty()) {
      throw InvalidState("solver: net parameter count changed mid-run");
    }
    cache_.resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      cache_[p].assign(params[p]->count(), real(0));
    }
  }

  for (std::size_t p = 0; p < params.size(); ++p) {
    auto w = params[p]->data();
    auto g = params[p]->diff();
    if (config_.method == SolverMethod::kSgd) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] -= config_.learning_rate * g[i];
      }
    } else {
      auto& cache = cache_[p];
      if (cache.size() != w.size()) {
        throw InvalidState("solver: parameter '" + params[p]->name() +
                           "' changed size mid-run");
      }
      for (std::size_t i = 0; i < w.size(); ++i) {
        cache[i] = config_.rms_decay * cache[i] +
                   (real(1) - config_.rms_decay) * g[i] * g[i];
        w[i] -= config_.learning_rate * g[i] / (std::sqrt(cache[i]) + config_.epsilon);
      }
    }
    params[p]->zero_diff();
  }
}

bool diffs_are_zeroed(const Net& net) {
  for (const Blob* param : net.params()) {
    for (real v : param->diff()) {
      if (v != real(0)) return false;
    }
  }
  return true;
}

}  // namespace polegrad
