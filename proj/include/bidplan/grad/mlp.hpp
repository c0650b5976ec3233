#pragma once

#include <span>
#include <string>
#include <vector>

#include "bidplan/grad/param_vector.hpp"
#include "bidplan/rng.hpp"

namespace bidplan {

enum class Activation { tanh, identity };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Fully connected stack: hidden layers apply `hidden`, the last layer is affine.
// Layer l owns "<prefix>.w<l>" (row-major, out x in) and "<prefix>.b<l>".
class Mlp {
 public:
  struct Tape {
    std::vector<std::vector<double>> act;  // act[0] is the input, act[l] the output of layer l
  };

  Mlp() = default;
  Mlp(std::vector<int> sizes, Activation hidden, ParamVector& params, const std::string& prefix);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation hidden() const { return hidden_; }
  std::size_t param_count() const;

  // Glorot-uniform weights, zero biases; the last layer is scaled by `output_scale`.
  void init(std::span<double> params, Rng& rng, double output_scale = 1.0) const;

  // `params` is the whole owning vector. Returns a view of tape.act.back().
  std::span<const double> forward(std::span<const double> params, std::span<const double> input,
                                  Tape& tape) const;

  // Accumulates into `param_grad` (whole-vector sized); overwrites `input_grad` if non-empty.
  void backward(std::span<const double> params, const Tape& tape,
                std::span<const double> upstream, std::span<double> param_grad,
                std::span<double> input_grad) const;

 private:
  std::vector<int> sizes_;
  Activation hidden_ = Activation::tanh;
  std::vector<std::size_t> w_offset_;
  std::vector<std::size_t> b_offset_;
};

}  // namespace bidplan
