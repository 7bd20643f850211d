#include "polegrad/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "polegrad/errors.hpp"

namespace polegrad {

int select_action_sigmoid(real aprob, Rng& rng) {
  if (!(aprob >= real(0) && aprob <= real(1))) {
    throw InvalidArgument("select_action_sigmoid: aprob must be in [0, 1]");
  }
  return rng.uniform01() < aprob ? 0 : 1;
}

int select_action_softmax(std::span<const real> probs, Rng& rng) {
  if (probs.empty()) {
    throw InvalidArgument("select_action_softmax: empty distribution");
  }
  real sum = 0;
  for (real p : probs) {
    if (!(p >= real(0) && p <= real(1))) {
      throw InvalidArgument("select_action_softmax: probabilities must be in [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - real(1)) > real(1e-6)) {
    throw InvalidArgument("select_action_softmax: probabilities sum to " +
                          std::to_string(sum));
  }
  const real draw = static_cast<real>(rng.uniform01());
  real cumulative = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    cumulative += probs[k];
    if (draw < cumulative) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size() - 1);
}

real dlogps_sigmoid(int action, real aprob) {
  if (action != 0 && action != 1) {
    throw InvalidArgument("dlogps_sigmoid: action must be 0 or 1");
  }
  if (!(aprob >= real(0) && aprob <= real(1))) {
    throw InvalidArgument("dlogps_sigmoid: aprob must be in [0, 1]");
  }
  return action == 0 ? real(1) - aprob : real(0) - aprob;
}

std::vector<real> dlogps_softmax(std::span<const real> probs, int action) {
  if (action < 0 || static_cast<std::size_t>(action) >= probs.size()) {
    throw InvalidArgument("dlogps_softmax: action " + std::to_string(action) +
                          " out of range for " + std::to_string(probs.size()) +
                          " probabilities");
  }
  std::vector<real> target(probs.size(), real(0));
  target[static_cast<std::size_t>(action)] = real(1);
  return softmax_xent_gradient(probs, target);
}

std::vector<real> discount_rewards(std::span<const real> rewards, real gamma,
                                   bool normalize) {
  if (rewards.empty()) {
    throw InvalidArgument("discount_rewards: empty reward sequence");
  }
  if (!(gamma >= real(0) && gamma < real(1))) {
    throw InvalidArgument("discount_rewards: gamma must be in [0, 1)");
  }
  std::vector<real> returns(rewards.size());
  real running = 0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    returns[t] = running;
  }
  if (normalize) {
    real mean = 0;
    for (real r : returns) mean += r;
    mean /= static_cast<real>(returns.size());
    real var = 0;
    for (real r : returns) var += (r - mean) * (r - mean);
    var /= static_cast<real>(returns.size());
    const real stddev = std::sqrt(var);
    for (real& r : returns) r -= mean;
    if (stddev >= real(1e-10)) {
      for (real& r : returns) r /= stddev;
    }
  }
  return returns;
}

std::vector<std::vector<real>> modulate_gradients(const GradientBatch& batch,
                                                  PolicyVariant variant) {
  if (batch.dlogps.size() != batch.returns.size()) {
    throw InvalidArgument("modulate_gradients: " + std::to_string(batch.dlogps.size()) +
                          " gradients for " + std::to_string(batch.returns.size()) +
                          " returns");
  }
  const real sign = variant == PolicyVariant::kSigmoid ? real(-1) : real(1);
  std::vector<std::vector<real>> diffs(batch.dlogps.size());
  for (std::size_t t = 0; t < batch.dlogps.size(); ++t) {
    diffs[t].resize(batch.dlogps[t].size());
    for (std::size_t i = 0; i < batch.dlogps[t].size(); ++i) {
      diffs[t][i] = sign * batch.dlogps[t][i] * batch.returns[t];
    }
  }
  return diffs;
}

// ---------------------------------------------------------------------------

PgTrainer::PgTrainer(Net& net, PolicyVariant variant) : net_(&net), variant_(variant) {
  for (const auto& layer : net.layers()) {
    if (layer->type() == LayerType::kMemoryData) {
      data_layer_ = static_cast<MemoryDataLayer*>(layer.get());
    } else if (layer->type() == LayerType::kMemoryLoss) {
      loss_layer_ = static_cast<MemoryLossLayer*>(layer.get());
    }
  }
  if (data_layer_ == nullptr) {
    throw InvalidArgument("trainer: model has no MemoryData layer");
  }
  if (loss_layer_ == nullptr) {
    throw InvalidArgument("trainer: model has no MemoryLoss layer");
  }
  if (data_layer_->sample_size() != static_cast<std::size_t>(cartpole::kStateDim)) {
    throw InvalidArgument("trainer: MemoryData sample size " +
                          std::to_string(data_layer_->sample_size()) + " != state size " +
                          std::to_string(cartpole::kStateDim));
  }
  if (data_layer_->spec().memory_data->batch_size != 1) {
    throw InvalidArgument("trainer: MemoryData batch_size must be 1");
  }

  prob_blob_ = loss_layer_->spec().bottoms[0];
  const LayerSpec* head = nullptr;
  for (const LayerSpec& spec : net.def().layers) {
    if (std::find(spec.tops.begin(), spec.tops.end(), prob_blob_) != spec.tops.end()) {
      head = &spec;
      break;
    }
  }
  if (head == nullptr) {
    throw InvalidArgument("trainer: no layer produces the loss bottom '" + prob_blob_ +
                          "'");
  }
  const LayerType expected_head =
      variant_ == PolicyVariant::kSigmoid ? LayerType::kSigmoid : LayerType::kSoftmax;
  if (head->type != expected_head) {
    throw InvalidArgument("trainer: the loss feeds from a " +
                          std::string(to_string(head->type)) + " layer, the " +
                          (variant_ == PolicyVariant::kSigmoid ? "sigmoid" : "softmax") +
                          " variant needs " + std::string(to_string(expected_head)));
  }
  logit_blob_ = head->bottoms[0];
  prob_ = &net.blob(prob_blob_);
  logit_ = &net.blob(logit_blob_);

  const std::size_t width = logit_->count();
  if (variant_ == PolicyVariant::kSigmoid && width != 1) {
    throw InvalidArgument("trainer: sigmoid variant needs logit width 1, model has " +
                          std::to_string(width));
  }
  if (variant_ == PolicyVariant::kSoftmax && width < 2) {
    throw InvalidArgument("trainer: softmax variant needs logit width >= 2, model has " +
                          std::to_string(width));
  }

  loss_layer_->set_loss_hook([this](Blob&) {
    auto diff = logit_->diff();
    if (pending_diff_.size() != diff.size()) {
      throw InvalidArgument("trainer: pending diff of " +
                            std::to_string(pending_diff_.size()) + " values for " +
                            std::to_string(diff.size()) + " logits");
    }
    std::copy(pending_diff_.begin(), pending_diff_.end(), diff.begin());
  });
}

std::vector<real> PgTrainer::forward_policy(const cartpole::State& state) {
  const real values[cartpole::kStateDim] = {state.x, state.x_dot, state.theta,
                                            state.theta_dot};
  data_layer_->enqueue(values);
  net_->forward();
  auto probs = prob_->data();
  return std::vector<real>(probs.begin(), probs.end());
}

Episode PgTrainer::run_episode(const cartpole::CartPole& env, Rng& rng) {
  Episode episode;
  cartpole::State state = env.reset(rng);
  for (int t = 0; t < cartpole::kMaxEpisodeSteps; ++t) {
    StepRecord record;
    record.state = state;
    record.aprob = forward_policy(state);
    record.action = variant_ == PolicyVariant::kSigmoid
                        ? select_action_sigmoid(record.aprob[0], rng)
                        : select_action_softmax(record.aprob, rng);
    const cartpole::StepResult result = env.step(state, record.action);
    record.reward = result.reward;
    episode.steps.push_back(std::move(record));
    if (result.done) break;
    state = result.state;
  }
  return episode;
}

void PgTrainer::accumulate_step(const StepRecord& step, std::span<const real> diff) {
  forward_policy(step.state);
  pending_diff_.assign(diff.begin(), diff.end());
  Blob* loss_bottom[] = {prob_};
  loss_layer_->backward({}, loss_bottom);
  net_->backward_from(logit_blob_);
}

TrainStats PgTrainer::train(const cartpole::CartPole& env,
                            const SolverConfig& solver_config,
                            const TrainerConfig& config, const ProgressSink& sink) {
  if (config.variant != variant_) {
    throw InvalidArgument("trainer: config variant does not match the trainer");
  }
  if (config.episodes_per_batch < 1) {
    throw InvalidArgument("trainer: episodes_per_batch must be >= 1");
  }
  if (config.max_episodes < 0) {
    throw InvalidArgument("trainer: max_episodes must be >= 0");
  }
  if (!(config.gamma >= real(0) && config.gamma < real(1))) {
    throw InvalidArgument("trainer: gamma must be in [0, 1)");
  }

  Rng rng(config.seed);
  Solver solver(solver_config);
  TrainStats stats;
  std::deque<real> return_window;
  real batch_return_sum = 0;
  int batch_episodes = 0;

  for (int ep = 0; ep < config.max_episodes; ++ep) {
    const Episode episode = run_episode(env, rng);

    GradientBatch batch;
    std::vector<real> rewards;
    rewards.reserve(episode.steps.size());
    batch.dlogps.reserve(episode.steps.size());
    for (const StepRecord& step : episode.steps) {
      if (variant_ == PolicyVariant::kSigmoid) {
        batch.dlogps.push_back({dlogps_sigmoid(step.action, step.aprob[0])});
      } else {
        batch.dlogps.push_back(dlogps_softmax(step.aprob, step.action));
      }
      rewards.push_back(step.reward);
    }
    batch.returns = discount_rewards(rewards, config.gamma, config.normalize_returns);
    const std::vector<std::vector<real>> diffs = modulate_gradients(batch, variant_);
    for (std::size_t t = 0; t < episode.steps.size(); ++t) {
      accumulate_step(episode.steps[t], diffs[t]);
    }

    const real episode_return = episode.total_reward();
    batch_return_sum += episode_return;
    ++batch_episodes;
    if (batch_episodes == config.episodes_per_batch) {
      solver.apply_update(*net_);
      stats.batch_mean_returns.push_back(batch_return_sum /
                                         static_cast<real>(batch_episodes));
      batch_return_sum = 0;
      batch_episodes = 0;
    }

    return_window.push_back(episode_return);
    if (return_window.size() > 100) return_window.pop_front();
    real window_sum = 0;
    for (real r : return_window) window_sum += r;

    stats.episode_lengths.push_back(static_cast<int>(episode.steps.size()));

    if (sink) {
      EpisodeStats es;
      es.episode = ep;
      es.length = static_cast<int>(episode.steps.size());
      es.total_reward = episode_return;
      es.mean_return_last_100 = window_sum / static_cast<real>(return_window.size());
      if (!sink(es)) break;
    }
  }
  return stats;
}

}  // namespace polegrad
