#include "bidplan/grad/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace bidplan {

const char* to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation: " + name);
}

Mlp::Mlp(std::vector<int> sizes, Activation hidden, ParamVector& params, const std::string& prefix)
    : sizes_(std::move(sizes)), hidden_(hidden) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
  for (int s : sizes_) {
    if (s < 1) throw std::invalid_argument("Mlp: layer sizes must be positive");
  }
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const auto in = static_cast<std::size_t>(sizes_[l - 1]);
    const auto out = static_cast<std::size_t>(sizes_[l]);
    w_offset_.push_back(params.add(prefix + ".w" + std::to_string(l), in * out));
    b_offset_.push_back(params.add(prefix + ".b" + std::to_string(l), out));
  }
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    n += static_cast<std::size_t>(sizes_[l - 1] + 1) * static_cast<std::size_t>(sizes_[l]);
  }
  return n;
}

void Mlp::init(std::span<double> params, Rng& rng, double output_scale) const {
  const std::size_t layers = w_offset_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double limit = std::sqrt(6.0 / (in + out)) * (l + 1 == layers ? output_scale : 1.0);
    for (int i = 0; i < in * out; ++i) {
      params[w_offset_[l] + static_cast<std::size_t>(i)] =
          limit > 0.0 ? uniform(rng, -limit, limit) : 0.0;
    }
    for (int j = 0; j < out; ++j) params[b_offset_[l] + static_cast<std::size_t>(j)] = 0.0;
  }
}

std::span<const double> Mlp::forward(std::span<const double> params,
                                     std::span<const double> input, Tape& tape) const {
  if (static_cast<int>(input.size()) != sizes_.front()) {
    throw std::domain_error("Mlp: input has " + std::to_string(input.size()) + " entries, expected " +
                            std::to_string(sizes_.front()));
  }
  const std::size_t layers = w_offset_.size();
  tape.act.resize(layers + 1);
  tape.act[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    const double* w = params.data() + w_offset_[l];
    const double* b = params.data() + b_offset_[l];
    const std::vector<double>& x = tape.act[l];
    std::vector<double>& y = tape.act[l + 1];
    y.resize(out);
    const bool squash = l + 1 < layers && hidden_ == Activation::tanh;
    for (std::size_t j = 0; j < out; ++j) {
      double z = b[j];
      const double* row = w + j * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * x[i];
      y[j] = squash ? std::tanh(z) : z;
    }
  }
  return tape.act.back();
}

void Mlp::backward(std::span<const double> params, const Tape& tape,
                   std::span<const double> upstream, std::span<double> param_grad,
                   std::span<double> input_grad) const {
  const std::size_t layers = w_offset_.size();
  if (tape.act.size() != layers + 1) throw std::domain_error("Mlp: tape does not match network");
  if (static_cast<int>(upstream.size()) != sizes_.back()) {
    throw std::domain_error("Mlp: upstream gradient has wrong length");
  }
  if (!input_grad.empty() && static_cast<int>(input_grad.size()) != sizes_.front()) {
    throw std::domain_error("Mlp: input gradient buffer has wrong length");
  }
  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> prev;
  for (std::size_t l = layers; l-- > 0;) {
    const auto in = static_cast<std::size_t>(sizes_[l]);
    const auto out = static_cast<std::size_t>(sizes_[l + 1]);
    if (l + 1 < layers && hidden_ == Activation::tanh) {
      const std::vector<double>& y = tape.act[l + 1];
      for (std::size_t j = 0; j < out; ++j) delta[j] *= 1.0 - y[j] * y[j];
    }
    const double* w = params.data() + w_offset_[l];
    double* gw = param_grad.data() + w_offset_[l];
    double* gb = param_grad.data() + b_offset_[l];
    const std::vector<double>& x = tape.act[l];
    const bool need_prev = l > 0 || !input_grad.empty();
    prev.assign(need_prev ? in : 0, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
      const double d = delta[j];
      if (d == 0.0) continue;
      gb[j] += d;
      double* grow = gw + j * in;
      const double* row = w + j * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * x[i];
      if (need_prev) {
        for (std::size_t i = 0; i < in; ++i) prev[i] += d * row[i];
      }
    }
    delta.swap(prev);
  }
  if (!input_grad.empty()) {
    for (std::size_t i = 0; i < input_grad.size(); ++i) input_grad[i] = delta[i];
  }
}

}  // namespace bidplan
