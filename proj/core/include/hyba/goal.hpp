#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "hyba/image.hpp"

namespace hyba {

/// Targeted: make the classifier output class `cls`.
/// Untargeted: make the classifier output anything but class `cls`.
struct AttackGoal {
  enum class Mode { targeted, untargeted };

  Mode mode = Mode::untargeted;
  int cls = 0;

  static AttackGoal targeted(int target) { return {Mode::targeted, target}; }
  static AttackGoal untargeted(int label) { return {Mode::untargeted, label}; }

  bool is_targeted() const noexcept { return mode == Mode::targeted; }
  friend bool operator==(const AttackGoal&, const AttackGoal&) = default;
};

/// A natural input the attacker perturbs. The seed image is the center of
/// the feasible L-infinity ball for every attack on it.
struct Seed {
  std::uint64_t id = 0;
  Image image;
  int label = 0;
  std::optional<int> target;
};

using GoalFn = std::function<AttackGoal(const Seed&)>;

/// Targeted toward `seed.target` when present, else untargeted away from the label.
AttackGoal goal_for(const Seed& seed);

/// Throws ConfigError unless 0 <= goal.cls < num_classes.
void check_goal(const AttackGoal& goal, int num_classes);

}  // namespace hyba
