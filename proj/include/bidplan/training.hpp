#pragma once

#include <stdexcept>
#include <string>

#include "bidplan/grad/param_vector.hpp"

namespace bidplan {

// Raised when a loss component or gradient becomes non-finite. Carries the
// last parameters that produced a finite loss so callers can persist them.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::string component, long step, ParamVector last_good)
      : std::runtime_error(component + " became non-finite at step " + std::to_string(step)),
        component_(std::move(component)),
        step_(step),
        last_good_(std::move(last_good)) {}

  const std::string& component() const { return component_; }
  long step() const { return step_; }
  const ParamVector& last_good() const { return last_good_; }

 private:
  std::string component_;
  long step_;
  ParamVector last_good_;
};

// Cosine decay from `base` to `base * floor_fraction` over `total` steps.
double cosine_learning_rate(double base, double floor_fraction, long step, long total);

}  // namespace bidplan
