#include "bidplan/grad/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bidplan/training.hpp"

namespace bidplan {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam: moment decays must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("adam: epsilon must be positive");
  if (!(clip_norm >= 0.0)) throw std::invalid_argument("adam: clip_norm must be >= 0");
}

Adam::Adam(AdamConfig config, std::size_t size)
    : config_(config), m_(size, 0.0), v_(size, 0.0) {
  config_.validate();
}

void Adam::step(ParamVector& params, const ParamVector& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::domain_error("adam: parameter/gradient size does not match optimizer state");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad.values[i])) {
      throw NonFiniteGradient("adam: non-finite gradient entry " + std::to_string(i) + " (" +
                              std::to_string(grad.values[i]) + "); step rejected");
    }
  }
  double scale = 1.0;
  if (config_.clip_norm > 0.0) {
    const double n = grad.norm();
    if (n > config_.clip_norm) scale = config_.clip_norm / n;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const double g = grad.values[i] * scale;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params.values[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

double cosine_learning_rate(double base, double floor_fraction, long step, long total) {
  if (total <= 1) return base;
  const double progress = std::clamp(static_cast<double>(step) / (total - 1), 0.0, 1.0);
  const double shape = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return base * (floor_fraction + (1.0 - floor_fraction) * shape);
}

}  // namespace bidplan
