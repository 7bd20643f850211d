#include "polegrad/cartpole.hpp"

#include <cmath>
#include <string>

#include "polegrad/errors.hpp"

namespace polegrad::cartpole {

State CartPole::reset(Rng& rng) const {
  State s;
  s.x = static_cast<real>(rng.uniform(-0.05, 0.05));
  s.x_dot = static_cast<real>(rng.uniform(-0.05, 0.05));
  s.theta = static_cast<real>(rng.uniform(-0.05, 0.05));
  s.theta_dot = static_cast<real>(rng.uniform(-0.05, 0.05));
  return s;
}

StepResult CartPole::step(const State& state, int action) const {
  if (action != 0 && action != 1) {
    throw InvalidArgument("cartpole: action must be 0 or 1, got " +
                          std::to_string(action));
  }
  const real force = action == 1 ? kForceMagnitude : -kForceMagnitude;
  const real cos_theta = std::cos(state.theta);
  const real sin_theta = std::sin(state.theta);

  const real temp =
      (force + kPoleMassLength * state.theta_dot * state.theta_dot * sin_theta) /
      kTotalMass;
  const real theta_acc =
      (kGravity * sin_theta - cos_theta * temp) /
      (kHalfPoleLength *
       (real(4.0 / 3.0) - kPoleMass * cos_theta * cos_theta / kTotalMass));
  const real x_acc = temp - kPoleMassLength * theta_acc * cos_theta / kTotalMass;

  StepResult result;
  result.state.x = state.x + kTimeStep * state.x_dot;
  result.state.x_dot = state.x_dot + kTimeStep * x_acc;
  result.state.theta = state.theta + kTimeStep * state.theta_dot;
  result.state.theta_dot = state.theta_dot + kTimeStep * theta_acc;

  result.done = result.state.x < -kTrackLimit || result.state.x > kTrackLimit ||
                result.state.theta < -kAngleLimit || result.state.theta > kAngleLimit;
  result.reward = result.done ? real(0) : real(1);
  return result;
}

}  // namespace polegrad::cartpole
