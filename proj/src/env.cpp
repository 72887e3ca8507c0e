#include "la3p/env.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

#include "la3p/random.hpp"

namespace la3p {

namespace {

constexpr double kPointMassDt = 0.1;
constexpr double kPointMassBound = 2.0;
constexpr double kPointMassMaxSpeed = 2.0;
constexpr int kPointMassSteps = 100;

constexpr double kPendulumDt = 0.05;
constexpr double kPendulumGravity = 10.0;
constexpr double kPendulumMass = 1.0;
constexpr double kPendulumLength = 1.0;
constexpr double kPendulumMaxSpeed = 8.0;
constexpr double kPendulumMaxTorque = 2.0;
constexpr int kPendulumSteps = 200;

double angle_normalize(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return std::fmod(std::fmod(x + std::numbers::pi, two_pi) + two_pi, two_pi) - std::numbers::pi;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

EnvKind parse_env_kind(std::string_view name) {
  const auto n = lowercase(name);
  if (n == "pointmass1d" || n == "pointmass") return EnvKind::PointMass1D;
  if (n == "pointmass2d") return EnvKind::PointMass2D;
  if (n == "pendulumswingup" || n == "pendulum") return EnvKind::PendulumSwingUp;
  if (n == "analyticbandit" || n == "bandit") return EnvKind::AnalyticBandit;
  throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::PointMass1D: return "PointMass1D";
    case EnvKind::PointMass2D: return "PointMass2D";
    case EnvKind::PendulumSwingUp: return "PendulumSwingUp";
    case EnvKind::AnalyticBandit: return "AnalyticBandit";
  }
  return "unknown";
}

namespace bandit {

double target_action(const Eigen::VectorXd& state) { return 0.5 * std::tanh(2.0 * state(0)); }

double reward(const Eigen::VectorXd& state, const Eigen::VectorXd& action) {
  const double d = action(0) - target_action(state);
  return -d * d;
}

Eigen::VectorXd successor(const Eigen::VectorXd& state, const Eigen::VectorXd& action) {
  return (state.array() + 0.5 * action(0)).cwiseMax(-1.0).cwiseMin(1.0).matrix();
}

}  // namespace bandit

Environment::Environment(EnvKind kind, EnvOptions options) : options_(options) {
  spec_.kind = kind;
  switch (kind) {
    case EnvKind::PointMass1D:
    case EnvKind::PointMass2D: {
      const int d = kind == EnvKind::PointMass1D ? 1 : 2;
      spec_.state_dim = 2 * d;
      spec_.action_dim = d;
      spec_.action_low = -1.0;
      spec_.action_high = 1.0;
      spec_.max_episode_steps = kPointMassSteps;
      position_ = Eigen::VectorXd::Zero(d);
      velocity_ = Eigen::VectorXd::Zero(d);
      break;
    }
    case EnvKind::PendulumSwingUp:
      spec_.state_dim = 3;
      spec_.action_dim = 1;
      spec_.action_low = -kPendulumMaxTorque;
      spec_.action_high = kPendulumMaxTorque;
      spec_.max_episode_steps = kPendulumSteps;
      position_ = Eigen::VectorXd::Zero(1);
      velocity_ = Eigen::VectorXd::Zero(1);
      break;
    case EnvKind::AnalyticBandit:
      if (options.bandit_state_dim < 1) {
        throw std::invalid_argument("AnalyticBandit: state dimension must be positive");
      }
      if (options.bandit_horizon != 1 && options.bandit_horizon != 2) {
        throw std::invalid_argument("AnalyticBandit: horizon must be 1 or 2");
      }
      spec_.state_dim = options.bandit_state_dim + (options.bandit_horizon == 2 ? 1 : 0);
      spec_.action_dim = 1;
      spec_.action_low = -1.0;
      spec_.action_high = 1.0;
      spec_.max_episode_steps = options.bandit_horizon;
      position_ = Eigen::VectorXd::Zero(options.bandit_state_dim);
      velocity_ = Eigen::VectorXd::Zero(0);
      break;
  }
}

Eigen::VectorXd Environment::observation() const {
  switch (spec_.kind) {
    case EnvKind::PointMass1D:
    case EnvKind::PointMass2D: {
      Eigen::VectorXd obs(spec_.state_dim);
      obs << position_, velocity_;
      return obs;
    }
    case EnvKind::PendulumSwingUp:
      return Eigen::Vector3d(std::cos(position_(0)), std::sin(position_(0)), velocity_(0));
    case EnvKind::AnalyticBandit: {
      if (options_.bandit_horizon == 1) return position_;
      Eigen::VectorXd obs(spec_.state_dim);
      obs << position_, static_cast<double>(steps_);
      return obs;
    }
  }
  return {};
}

Eigen::VectorXd Environment::reset(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  steps_ = 0;
  switch (spec_.kind) {
    case EnvKind::PointMass1D:
    case EnvKind::PointMass2D:
      for (Eigen::Index i = 0; i < position_.size(); ++i) position_(i) = unit(rng);
      velocity_.setZero();
      break;
    case EnvKind::PendulumSwingUp:
      position_(0) = std::numbers::pi * unit(rng);
      velocity_(0) = unit(rng);
      break;
    case EnvKind::AnalyticBandit:
      for (Eigen::Index i = 0; i < position_.size(); ++i) position_(i) = unit(rng);
      break;
  }
  steps_ = 0;
  done_ = false;
  return observation();
}

Eigen::VectorXd Environment::clip_action(const Eigen::VectorXd& action) {
  if (action.size() != spec_.action_dim) {
    throw std::invalid_argument("Environment::step: action has wrong dimension");
  }
  if (!action.allFinite()) throw std::invalid_argument("Environment::step: non-finite action");
  Eigen::VectorXd clipped = action.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
  if (clipped != action) {
    if (clipped_ == 0) {
      std::cerr << "warning: " << to_string(spec_.kind)
                << ": action outside bounds, clipping (further warnings suppressed)\n";
    }
    ++clipped_;
  }
  return clipped;
}

StepResult Environment::step(const Eigen::VectorXd& raw_action) {
  if (done_) throw std::logic_error("Environment::step: episode is over, call reset()");
  const Eigen::VectorXd a = clip_action(raw_action);
  StepResult res;

  switch (spec_.kind) {
    case EnvKind::PointMass1D:
    case EnvKind::PointMass2D: {
      res.reward = -(position_.squaredNorm() + 0.01 * a.squaredNorm());
      for (Eigen::Index i = 0; i < position_.size(); ++i) {
        double v = std::clamp(velocity_(i) + a(i) * kPointMassDt, -kPointMassMaxSpeed,
                              kPointMassMaxSpeed);
        double x = position_(i) + v * kPointMassDt;
        if (std::abs(x) > kPointMassBound) {
          x = std::copysign(kPointMassBound, x);
          v = 0.0;
        }
        position_(i) = x;
        velocity_(i) = v;
      }
      break;
    }
    case EnvKind::PendulumSwingUp: {
      const double th = position_(0);
      const double thdot = velocity_(0);
      const double u = a(0);
      const double angle = angle_normalize(th);
      res.reward = -(angle * angle + 0.1 * thdot * thdot + 0.001 * u * u);
      double new_thdot =
          thdot + (3.0 * kPendulumGravity / (2.0 * kPendulumLength) * std::sin(th) +
                   3.0 / (kPendulumMass * kPendulumLength * kPendulumLength) * u) *
                      kPendulumDt;
      new_thdot = std::clamp(new_thdot, -kPendulumMaxSpeed, kPendulumMaxSpeed);
      position_(0) = th + new_thdot * kPendulumDt;
      velocity_(0) = new_thdot;
      break;
    }
    case EnvKind::AnalyticBandit:
      res.reward = bandit::reward(position_, a);
      position_ = bandit::successor(position_, a);
      break;
  }

  ++steps_;
  done_ = steps_ >= spec_.max_episode_steps;
  res.done = done_;
  res.truncated = done_ && spec_.kind != EnvKind::AnalyticBandit;
  res.next_state = observation();
  return res;
}

double Environment::optimal_q(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const {
  if (spec_.kind != EnvKind::AnalyticBandit || options_.bandit_horizon != 1) {
    throw std::logic_error("optimal_q: only defined for the one-step AnalyticBandit");
  }
  return bandit::reward(state, action);
}

double Environment::reward_lower_bound() const {
  switch (spec_.kind) {
    case EnvKind::PointMass1D:
    case EnvKind::PointMass2D: {
      const double d = spec_.action_dim;
      return -(d * kPointMassBound * kPointMassBound + 0.01 * d);
    }
    case EnvKind::PendulumSwingUp:
      return -(std::numbers::pi * std::numbers::pi + 0.1 * kPendulumMaxSpeed * kPendulumMaxSpeed +
               0.001 * kPendulumMaxTorque * kPendulumMaxTorque);
    case EnvKind::AnalyticBandit:
      return -2.25;
  }
  return 0.0;
}

}  // namespace la3p
