#pragma once

#include <stdexcept>
#include <vector>

#include "bidplan/grad/param_vector.hpp"

namespace bidplan {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // rescale gradients whose norm exceeds this; 0 disables

  void validate() const;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig config, std::size_t size);

  // Throws NonFiniteGradient, leaving parameters and moments untouched, if any
  // gradient entry is NaN or infinite.
  void step(ParamVector& params, const ParamVector& grad);

  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

}  // namespace bidplan
