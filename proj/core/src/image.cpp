#include "hyba/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyba/error.hpp"
#include "hyba/goal.hpp"

namespace hyba {

Image::Image(std::vector<double> data, Shape shape) : data_(std::move(data)), shape_(shape) {
  validate();
}

Image::Image(std::vector<double> data) : data_(std::move(data)), shape_{1, data_.size(), 1} {
  validate();
}

void Image::validate() const {
  if (data_.empty()) throw DimensionError("image: empty data");
  if (shape_.size() != data_.size()) {
    throw DimensionError("image: shape product " + std::to_string(shape_.size()) +
                         " != data length " + std::to_string(data_.size()));
  }
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("image: component outside [0,1]");
  }
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("linf_distance: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

AttackGoal goal_for(const Seed& seed) {
  return seed.target ? AttackGoal::targeted(*seed.target) : AttackGoal::untargeted(seed.label);
}

void check_goal(const AttackGoal& goal, int num_classes) {
  if (goal.cls < 0 || goal.cls >= num_classes) {
    throw ConfigError("goal class " + std::to_string(goal.cls) + " out of range [0, " +
                      std::to_string(num_classes) + ")");
  }
}

}  // namespace hyba
