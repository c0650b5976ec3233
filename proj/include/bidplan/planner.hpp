#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bidplan/dataset.hpp"
#include "bidplan/evaluator.hpp"
#include "bidplan/grad/causal.hpp"
#include "bidplan/grad/checkpoint.hpp"
#include "bidplan/rng.hpp"

namespace bidplan {

// Planner cost units: c * T / B, so 1.0 is the uniform per-step spend.
std::vector<double> normalize_costs(std::span<const double> costs, double budget, int horizon);
std::vector<double> denormalize_costs(std::span<const double> units, double budget, int horizon);

// Autoregressive Gaussian over normalized costs with a fixed standard deviation:
// u_t ~ N(mu(t | u_1..u_{t-1}, y / y_m, x), sigma^2).
class PlannerModel {
 public:
  PlannerModel(const CausalNetConfig& net, double sigma, double condition_scale);
  PlannerModel(const PlannerModel& other);
  PlannerModel& operator=(const PlannerModel& other);
  PlannerModel(PlannerModel&&) noexcept = default;
  PlannerModel& operator=(PlannerModel&&) noexcept = default;

  int horizon() const { return net_->config().horizon; }
  int feature_dim() const { return net_->config().feature_dim; }
  double sigma() const { return sigma_; }
  double condition_scale() const { return condition_scale_; }
  double normalize_condition(double y) const { return y / condition_scale_; }

  CausalMeanNet& net() { return *net_; }
  const CausalMeanNet& net() const { return *net_; }
  ParamVector& params() { return net_->params(); }
  const ParamVector& params() const { return net_->params(); }

  // Mean of u_t given the normalized prefix and the raw condition y.
  double mean(int t, std::span<const double> prefix, double y,
              std::span<const double> feature) const;

 private:
  std::unique_ptr<CausalMeanNet> net_;
  double sigma_;
  double condition_scale_;
};

struct PlanContext {
  std::vector<double> feature;
  double budget = 0.0;
};

// One context per distinct profile in the dataset, in profile-id order.
std::vector<PlanContext> dataset_contexts(const OfflineDataset& dataset);

// Extends the normalized `history` to the full horizon with u_t = mu_t + sigma * noise[k],
// where k counts generated steps. Returns the full sequence.
std::vector<double> generate(const PlannerModel& model, double y, std::span<const double> history,
                             std::span<const double> feature, std::span<const double> noise);

std::vector<double> draw_noise(int length, Rng& rng);

double log_prob(const PlannerModel& model, std::span<const double> units, double y,
                std::span<const double> feature);

// Adds scale * d(log_prob)/d(params) into `grad`.
void accumulate_log_prob_grad(const PlannerModel& model, std::span<const double> units, double y,
                              std::span<const double> feature, double scale,
                              std::span<double> grad);

struct PlannerObjective {
  double value = 0.0;
  double std_error = 0.0;
  ParamVector grad;
};

// Negative mean log-likelihood of dataset trajectories under their own qualities.
PlannerObjective bc_loss(const PlannerModel& model, std::span<const LabeledSample> batch);

// Scores a normalized cost sequence for the given context.
using PlanScorer = std::function<double(std::span<const double> units, const PlanContext& context)>;

// Clips costs in order to [0, remaining budget], the spend the simulator would allow.
std::vector<double> budget_projection(std::span<const double> costs, double budget);

// Scores with the evaluator. With `project`, a plan is scored through its budget
// projection, so overspending plans are valued as the truncated trajectories they
// would realize. The scorer is never differentiated, so this leaves gradients intact.
PlanScorer evaluator_scorer(const EvaluatorModel& evaluator, bool project = true);

// Exponential moving average of scores, one per planning context. Until a
// context's first update the estimator uses that context's batch mean.
struct ScoreBaseline {
  double decay = 0.99;
  std::vector<double> values;
  std::vector<bool> initialized;

  bool has(std::size_t context) const {
    return context < initialized.size() && initialized[context];
  }
  double value(std::size_t context) const { return values.at(context); }
  void update(std::size_t context, double batch_mean);
};

// value: mean score over fresh rollouts at y_star; rollout i uses context
// (offset + i) mod size for a random offset, so contexts are balanced.
// grad: mean of (sum_t d log p(u_t | ...)/d params) * (score - baseline), the
// ascent direction of the expected score. Baselines are read before this
// batch and then updated with the per-context batch means.
PlannerObjective score_gradient(const PlannerModel& model, const PlanScorer& scorer,
                                double y_star, std::span<const PlanContext> contexts,
                                int n_rollouts, ScoreBaseline& baseline, Rng& rng);

struct CoupledEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> samples;
};

// Mean over shared noise sequences of sum_t |u1_t - u2_t| (normalized units).
CoupledEstimate sync_coupled_w1(const PlannerModel& model, double y1, double y2,
                                std::span<const double> feature, int n_noise, Rng& rng);

// Same transport cost with independent noise for the two rollouts.
CoupledEstimate independent_coupled_w1(const PlannerModel& model, double y1, double y2,
                                       std::span<const double> feature, int n_noise, Rng& rng);

// Rollouts generated from the given noise sequences.
std::vector<std::vector<double>> rollouts(const PlannerModel& model, double y,
                                          std::span<const double> feature,
                                          const std::vector<std::vector<double>>& noise);

// Backpropagates direct sequence gradients `lambda` (dL/du_t, consumed in place)
// through a generated rollout; steps before `start` are fixed history.
void backprop_rollout(const PlannerModel& model, std::span<const double> units, double y,
                      std::span<const double> feature, std::span<double> lambda, int start,
                      std::span<double> grad);

struct PenaltyConfig {
  double lp = 1.0;  // in normalized units: transport per unit of y / y_m
  int pairs = 8;
  int n_noise = 4;
};

// Mean over condition pairs of max(0, W1_sync(y1, y2) - lp * |y1 - y2| / y_m).
// Even-indexed pairs pair y_star with a pool condition; odd-indexed pairs draw both from the pool.
PlannerObjective lipschitz_penalty(const PlannerModel& model, std::span<const double> pool,
                                   double y_star, const PenaltyConfig& config,
                                   std::span<const PlanContext> contexts, Rng& rng);

struct PlannerTrainConfig {
  double beta2 = 0.002;
  double beta3 = 1.0;
  double lp = 1.0;
  double epsilon = 0.05;
  double score_weight = 1.0;
  int steps = 1000;
  int n_rollouts = 64;
  int bc_batch = 64;
  int penalty_pairs = 8;
  int n_noise = 4;
  double baseline_decay = 0.99;
  double learning_rate = 3e-3;
  double lr_floor = 0.1;
  double clip_norm = 0.0;
  int validation_every = 25;
  int validation_rollouts = 128;
  int pretrain_steps = 1500;
  double pretrain_learning_rate = 2e-3;

  void validate() const;
  double y_star(double y_max) const { return (1.0 + epsilon) * y_max; }
};

struct PlannerStepLog {
  int step = 0;
  double l_estimate = 0.0;
  double bc_nll = 0.0;
  double lipschitz_penalty = 0.0;
  double grad_norm = 0.0;
  double validation_l = 0.0;  // NaN when not evaluated at this step
};

struct PlannerTraining {
  std::vector<PlannerStepLog> log;
  bool diverged = false;
  std::string divergence;
  int best_step = -1;
  double best_validation_l = 0.0;
};

// Conditional behavior cloning only (warm start).
std::vector<PlannerStepLog> pretrain_planner(PlannerModel& model, const OfflineDataset& dataset,
                                             const PlannerTrainConfig& config, Rng& rng);

struct PlannerLoss {
  double l_estimate = 0.0;
  double bc_nll = 0.0;
  double penalty = 0.0;
  ParamVector grad;  // of the minimized total
};

PlannerLoss planner_loss(const PlannerModel& model, const PlanScorer& scorer,
                         const OfflineDataset& dataset, std::span<const PlanContext> contexts,
                         std::span<const double> pool, const PlannerTrainConfig& config,
                         ScoreBaseline& baseline, Rng& rng);

// Score maximization with the behavior-cloning and Lipschitz terms. The final
// iterate is kept; on divergence the best model by validation score is restored.
PlannerTraining train_planner(PlannerModel& model, const PlanScorer& scorer,
                              const OfflineDataset& dataset, const PlannerTrainConfig& config,
                              Rng& rng);

// Mean score of rollouts at y driven by fixed noise; rollout i uses context i mod size.
double validation_score(const PlannerModel& model, const PlanScorer& scorer, double y,
                        std::span<const PlanContext> contexts,
                        const std::vector<std::vector<double>>& noise);

Checkpoint planner_checkpoint(const PlannerModel& model);
PlannerModel planner_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace bidplan
