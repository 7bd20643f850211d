#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "polegrad/cartpole.hpp"
#include "polegrad/net.hpp"
#include "polegrad/solver.hpp"
#include "polegrad/types.hpp"

namespace polegrad {

enum class PolicyVariant { kSigmoid, kSoftmax };

struct StepRecord {
  cartpole::State state;    // observation the action was chosen from
  int action = 0;
  std::vector<real> aprob;  // P(action 0) for sigmoid; full distribution for softmax
  real reward = 0;
};

struct Episode {
  std::vector<StepRecord> steps;

  real total_reward() const {
    real sum = 0;
    for (const StepRecord& s : steps) sum += s.reward;
    return sum;
  }
};

struct GradientBatch {
  std::vector<std::vector<real>> dlogps;  // one vector per step
  std::vector<real> returns;              // discounted return per step
};

struct TrainerConfig {
  PolicyVariant variant = PolicyVariant::kSigmoid;
  real gamma = real(0.99);
  int episodes_per_batch = 10;
  bool normalize_returns = true;
  int max_episodes = 1000;
  std::uint64_t seed = 0;
};

struct EpisodeStats {
  int episode = 0;  // 0-based
  int length = 0;
  real total_reward = 0;
  real mean_return_last_100 = 0;
};

// Called after each episode (and after the batch update, when one landed on
// this episode). Return false to stop training early.
using ProgressSink = std::function<bool(const EpisodeStats&)>;

struct TrainStats {
  std::vector<int> episode_lengths;
  std::vector<real> batch_mean_returns;
};

// Action 0 iff draw < aprob, so aprob is the probability of action 0.
int select_action_sigmoid(real aprob, Rng& rng);

// Inverse-CDF draw: smallest k whose cumulative probability exceeds the draw.
int select_action_softmax(std::span<const real> probs, Rng& rng);

// d log pi / d logit for the taken action: 1 - aprob for action 0, -aprob
// for action 1.
real dlogps_sigmoid(int action, real aprob);

// probs - onehot(action).
std::vector<real> dlogps_softmax(std::span<const real> probs, int action);

// R_t = r_t + gamma * R_{t+1}. With normalize, the result is shifted to
// mean 0 and scaled to unit standard deviation (scaling skipped when the
// deviation is below 1e-10).
std::vector<real> discount_rewards(std::span<const real> rewards, real gamma,
                                   bool normalize);

// Turns per-step score gradients and returns into injectable diffs:
// -dlogps * R for the sigmoid head, +dlogps * R for the softmax head (whose
// dlogps already points down the loss gradient).
std::vector<std::vector<real>> modulate_gradients(const GradientBatch& batch,
                                                  PolicyVariant variant);

// Runs episodes through a policy net and trains it with batched REINFORCE
// updates. The net must contain a MemoryData feed of the 4 state values and
// a MemoryLoss whose bottom is the output of a Sigmoid (scalar head) or
// Softmax (action distribution head); gradients are injected at that head's
// input logits through the MemoryLoss hook, and backward runs from the
// logit blob so the head itself is bypassed.
class PgTrainer {
 public:
  PgTrainer(Net& net, PolicyVariant variant);

  const std::string& logit_blob() const { return logit_blob_; }
  const std::string& prob_blob() const { return prob_blob_; }

  Episode run_episode(const cartpole::CartPole& env, Rng& rng);

  // Replays one recorded step (fresh forward pass), injects `diff` at the
  // logits, and accumulates parameter gradients.
  void accumulate_step(const StepRecord& step, std::span<const real> diff);

  TrainStats train(const cartpole::CartPole& env, const SolverConfig& solver_config,
                   const TrainerConfig& config, const ProgressSink& sink = {});

 private:
  std::vector<real> forward_policy(const cartpole::State& state);

  Net* net_;
  PolicyVariant variant_;
  MemoryDataLayer* data_layer_ = nullptr;
  MemoryLossLayer* loss_layer_ = nullptr;
  Blob* prob_ = nullptr;
  Blob* logit_ = nullptr;
  std::string prob_blob_;
  std::string logit_blob_;
  std::vector<real> pending_diff_;
};

}  // namespace polegrad
