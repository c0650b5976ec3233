#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bidplan/grad/mlp.hpp"
#include "bidplan/grad/param_vector.hpp"
#include "bidplan/rng.hpp"

namespace bidplan {

struct Gradients {
  ParamVector params;
  std::vector<double> input;
};

// A parameterized map R^n -> R^m with reverse-mode gradients.
class DiffFunction {
 public:
  virtual ~DiffFunction() = default;

  virtual std::string kind() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual std::vector<double> forward(std::span<const double> input) const = 0;
  // Gradients of <upstream, forward(input)> with respect to the parameters and the input.
  virtual Gradients backward(std::span<const double> input,
                             std::span<const double> upstream) const = 0;

  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }

 protected:
  void check_input(std::span<const double> input) const;
  void check_upstream(std::span<const double> upstream) const;

  ParamVector params_;
};

enum class OutputTransform { identity, softplus };

double softplus(double z);
double sigmoid(double z);

class DenseNet : public DiffFunction {
 public:
  DenseNet(std::vector<int> sizes, Activation hidden,
           OutputTransform transform = OutputTransform::identity);

  void init(Rng& rng, double output_scale = 1.0);

  std::string kind() const override { return "dense"; }
  int input_dim() const override { return mlp_.input_dim(); }
  int output_dim() const override { return mlp_.output_dim(); }
  std::vector<double> forward(std::span<const double> input) const override;
  Gradients backward(std::span<const double> input,
                     std::span<const double> upstream) const override;

  const Mlp& mlp() const { return mlp_; }
  OutputTransform transform() const { return transform_; }

 private:
  Mlp mlp_;
  OutputTransform transform_;
};

// Applies one shared MLP (step_dim -> 1) to each of `steps` consecutive input
// rows and averages the results. Input is the row-major steps x step_dim matrix.
class StepPooledNet : public DiffFunction {
 public:
  StepPooledNet(int steps, int step_dim, const std::vector<int>& hidden, Activation activation);

  void init(Rng& rng, double output_scale = 1.0);

  std::string kind() const override { return "step-pooled"; }
  int input_dim() const override { return steps_ * step_dim_; }
  int output_dim() const override { return 1; }
  int steps() const { return steps_; }
  int step_dim() const { return step_dim_; }
  std::vector<double> forward(std::span<const double> input) const override;
  Gradients backward(std::span<const double> input,
                     std::span<const double> upstream) const override;

  // Adds upstream * d(output)/d(params) into `param_grad` and writes the input gradient.
  void accumulate(std::span<const double> input, double upstream, std::span<double> param_grad,
                  std::span<double> input_grad) const;

  const Mlp& mlp() const { return mlp_; }

 private:
  int steps_;
  int step_dim_;
  Mlp mlp_;
};

}  // namespace bidplan
