#include "bidplan/grad/networks.hpp"

#include <cmath>
#include <stdexcept>

namespace bidplan {

void DiffFunction::check_input(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_dim()) {
    throw std::domain_error(kind() + ": input has " + std::to_string(input.size()) +
                            " entries, expected " + std::to_string(input_dim()));
  }
}

void DiffFunction::check_upstream(std::span<const double> upstream) const {
  if (static_cast<int>(upstream.size()) != output_dim()) {
    throw std::domain_error(kind() + ": upstream gradient has " + std::to_string(upstream.size()) +
                            " entries, expected " + std::to_string(output_dim()));
  }
}

double softplus(double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

DenseNet::DenseNet(std::vector<int> sizes, Activation hidden, OutputTransform transform)
    : mlp_(std::move(sizes), hidden, params_, "dense"), transform_(transform) {}

void DenseNet::init(Rng& rng, double output_scale) { mlp_.init(params_.values, rng, output_scale); }

std::vector<double> DenseNet::forward(std::span<const double> input) const {
  check_input(input);
  Mlp::Tape tape;
  std::span<const double> z = mlp_.forward(params_.values, input, tape);
  std::vector<double> out(z.begin(), z.end());
  if (transform_ == OutputTransform::softplus) {
    for (double& v : out) v = softplus(v);
  }
  return out;
}

Gradients DenseNet::backward(std::span<const double> input,
                             std::span<const double> upstream) const {
  check_input(input);
  check_upstream(upstream);
  Mlp::Tape tape;
  std::span<const double> z = mlp_.forward(params_.values, input, tape);
  std::vector<double> dz(upstream.begin(), upstream.end());
  if (transform_ == OutputTransform::softplus) {
    for (std::size_t i = 0; i < dz.size(); ++i) dz[i] *= sigmoid(z[i]);
  }
  Gradients g{params_.zeros_like(), std::vector<double>(input.size())};
  mlp_.backward(params_.values, tape, dz, g.params.values, g.input);
  return g;
}

namespace {

std::vector<int> pooled_sizes(int step_dim, const std::vector<int>& hidden) {
  std::vector<int> sizes{step_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

}  // namespace

StepPooledNet::StepPooledNet(int steps, int step_dim, const std::vector<int>& hidden,
                             Activation activation)
    : steps_(steps),
      step_dim_(step_dim),
      mlp_(pooled_sizes(step_dim, hidden), activation, params_, "step") {
  if (steps < 1) throw std::invalid_argument("StepPooledNet: steps must be >= 1");
}

void StepPooledNet::init(Rng& rng, double output_scale) {
  mlp_.init(params_.values, rng, output_scale);
}

std::vector<double> StepPooledNet::forward(std::span<const double> input) const {
  check_input(input);
  Mlp::Tape tape;
  double sum = 0.0;
  const auto d = static_cast<std::size_t>(step_dim_);
  for (int t = 0; t < steps_; ++t) {
    sum += mlp_.forward(params_.values, input.subspan(static_cast<std::size_t>(t) * d, d), tape)[0];
  }
  return {sum / steps_};
}

void StepPooledNet::accumulate(std::span<const double> input, double upstream,
                               std::span<double> param_grad, std::span<double> input_grad) const {
  check_input(input);
  if (param_grad.size() != params_.size()) {
    throw std::domain_error("StepPooledNet: parameter gradient buffer has wrong length");
  }
  Mlp::Tape tape;
  const auto d = static_cast<std::size_t>(step_dim_);
  const double up[1] = {upstream / steps_};
  for (int t = 0; t < steps_; ++t) {
    const auto row = input.subspan(static_cast<std::size_t>(t) * d, d);
    mlp_.forward(params_.values, row, tape);
    mlp_.backward(params_.values, tape, up, param_grad,
                  input_grad.empty() ? input_grad
                                     : input_grad.subspan(static_cast<std::size_t>(t) * d, d));
  }
}

Gradients StepPooledNet::backward(std::span<const double> input,
                                  std::span<const double> upstream) const {
  check_upstream(upstream);
  Gradients g{params_.zeros_like(), std::vector<double>(input.size())};
  accumulate(input, upstream[0], g.params.values, g.input);
  return g;
}

}  // namespace bidplan
