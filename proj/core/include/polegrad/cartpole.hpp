#pragma once

#include <numbers>

#include "polegrad/backend.hpp"
#include "polegrad/types.hpp"

namespace polegrad::cartpole {

// Classic cart-pole constants: 1.0 kg cart, 0.1 kg pole of half-length
// 0.5 m, +/-10 N bang-bang force, 0.02 s Euler steps. The episode fails
// when the cart leaves +/-2.4 m or the pole passes 20 degrees.
inline constexpr real kGravity = real(9.8);
inline constexpr real kCartMass = real(1.0);
inline constexpr real kPoleMass = real(0.1);
inline constexpr real kTotalMass = kCartMass + kPoleMass;
inline constexpr real kHalfPoleLength = real(0.5);
inline constexpr real kPoleMassLength = kPoleMass * kHalfPoleLength;
inline constexpr real kForceMagnitude = real(10.0);
inline constexpr real kTimeStep = real(0.02);
inline constexpr real kTrackLimit = real(2.4);
inline constexpr real kAngleLimit = real(20.0 * std::numbers::pi / 180.0);
inline constexpr int kMaxEpisodeSteps = 10000;
inline constexpr int kStateDim = 4;

struct State {
  real x = 0;          // cart position (m)
  real x_dot = 0;      // cart velocity (m/s)
  real theta = 0;      // pole angle (rad), 0 is upright
  real theta_dot = 0;  // pole angular velocity (rad/s)

  bool operator==(const State&) const = default;
};

struct StepResult {
  State state;
  real reward = 0;  // 1 while balanced, 0 on the failing step
  bool done = false;
};

// Stateless dynamics; each episode's state lives with the caller.
struct CartPole {
  // All four components uniform in [-0.05, 0.05].
  State reset(Rng& rng) const;

  // One Euler step. Action 0 pushes with -F, action 1 with +F; anything
  // else throws InvalidArgument. Position updates use the derivatives from
  // before the acceleration update.
  StepResult step(const State& state, int action) const;
};

}  // namespace polegrad::cartpole
