#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bidplan/grad/mlp.hpp"
#include "bidplan/grad/networks.hpp"
#include "bidplan/grad/param_vector.hpp"
#include "bidplan/rng.hpp"

namespace bidplan {

enum class CausalKind { window, attention };

const char* to_string(CausalKind kind);
CausalKind causal_kind_from_string(const std::string& name);

struct CausalNetConfig {
  CausalKind kind = CausalKind::window;
  int horizon = 48;
  int feature_dim = 4;
  int window = 8;             // window kind: number of most recent costs fed in
  int width = 16;             // attention kind: key/query/value width
  std::vector<int> hidden{32, 32};
  Activation activation = Activation::tanh;
  bool use_cumulative = true;  // feed the running spend fraction sum(prefix) / horizon
  bool use_time = true;        // feed (t - 1) / horizon

  void validate() const;
};

// Scalar next-step mean mu(t | prefix, condition, feature) that reads only the
// prefix c_1..c_{t-1}, so step t never depends on later entries.
class CausalMeanNet {
 public:
  virtual ~CausalMeanNet() = default;
  virtual std::unique_ptr<CausalMeanNet> clone() const = 0;

  const CausalNetConfig& config() const { return config_; }
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }

  virtual void init(Rng& rng, double output_scale) = 0;

  // t is 1-based; prefix holds at least t - 1 entries, of which only the first t - 1 are read.
  virtual double mean_at(int t, std::span<const double> prefix, double condition,
                         std::span<const double> feature) const = 0;

  // Adds upstream * d(mean)/d(params) to `param_grad` and upstream * d(mean)/d(prefix[j])
  // to prefix_grad[j] for j < t - 1 when `prefix_grad` is non-empty.
  virtual void backward_at(int t, std::span<const double> prefix, double condition,
                           std::span<const double> feature, double upstream,
                           std::span<double> param_grad, std::span<double> prefix_grad) const = 0;

 protected:
  explicit CausalMeanNet(CausalNetConfig config);
  void check_call(int t, std::span<const double> prefix, std::span<const double> feature) const;

  CausalNetConfig config_;
  ParamVector params_;
};

class WindowMeanNet : public CausalMeanNet {
 public:
  explicit WindowMeanNet(CausalNetConfig config);
  std::unique_ptr<CausalMeanNet> clone() const override;
  void init(Rng& rng, double output_scale) override;
  double mean_at(int t, std::span<const double> prefix, double condition,
                 std::span<const double> feature) const override;
  void backward_at(int t, std::span<const double> prefix, double condition,
                   std::span<const double> feature, double upstream, std::span<double> param_grad,
                   std::span<double> prefix_grad) const override;

  int input_dim() const { return mlp_.input_dim(); }

 private:
  void encode(int t, std::span<const double> prefix, double condition,
              std::span<const double> feature, std::vector<double>& out) const;
  Mlp mlp_;
};

// Single-head causal self-attention over past (cost, position) tokens, queried
// from the current context, followed by an MLP head.
class AttentionMeanNet : public CausalMeanNet {
 public:
  explicit AttentionMeanNet(CausalNetConfig config);
  std::unique_ptr<CausalMeanNet> clone() const override;
  void init(Rng& rng, double output_scale) override;
  double mean_at(int t, std::span<const double> prefix, double condition,
                 std::span<const double> feature) const override;
  void backward_at(int t, std::span<const double> prefix, double condition,
                   std::span<const double> feature, double upstream, std::span<double> param_grad,
                   std::span<double> prefix_grad) const override;

 private:
  struct Cache;
  int context_dim() const;
  void run(int t, std::span<const double> prefix, double condition,
           std::span<const double> feature, Cache& cache) const;

  std::size_t wq_, bq_, wk_, bk_, wv_, bv_;
  Mlp head_;
};

std::unique_ptr<CausalMeanNet> make_causal_net(const CausalNetConfig& config);

// Teacher-forced view of a causal net as a DiffFunction:
// input [c_1..c_T, condition, feature...] -> output [mu_1..mu_T].
// The input gradient covers the cost entries; condition and feature entries stay zero.
class TeacherForcedFunction : public DiffFunction {
 public:
  explicit TeacherForcedFunction(const CausalMeanNet& net);

  std::string kind() const override { return "teacher-forced"; }
  int input_dim() const override;
  int output_dim() const override { return net_->config().horizon; }
  std::vector<double> forward(std::span<const double> input) const override;
  Gradients backward(std::span<const double> input,
                     std::span<const double> upstream) const override;

  const CausalMeanNet& net() const { return *net_; }

 private:
  std::unique_ptr<CausalMeanNet> bound() const;  // copy of the net carrying params()
  std::unique_ptr<CausalMeanNet> net_;
};

}  // namespace bidplan
