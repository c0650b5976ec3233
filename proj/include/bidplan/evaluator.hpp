#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "bidplan/dataset.hpp"
#include "bidplan/env.hpp"
#include "bidplan/grad/checkpoint.hpp"
#include "bidplan/grad/networks.hpp"
#include "bidplan/rng.hpp"

namespace bidplan {

// Per-step input: [c_t * T / B, spend before t / B, (t - 1) / T, feature...].
inline constexpr int kEvaluatorStepExtras = 3;

struct EvaluatorConfig {
  std::vector<int> hidden{32, 32};
  Activation activation = Activation::tanh;
  double beta1 = 10.0;
  int steps = 1500;
  int batch_size = 64;
  int pair_batch = 64;
  double perturbed_fraction = 0.5;  // share of penalty pairs drawn in perturbed mode
  double perturb_scale = 0.1;
  double learning_rate = 2e-3;
  double lr_floor = 0.05;
  double clip_norm = 10.0;
  int lipschitz_pairs = 8000;

  void validate() const;
};

// y_hat(tau) = condition_scale * net(encode(tau)).
struct EvaluatorModel {
  int horizon = 0;
  int feature_dim = 0;
  double condition_scale = 1.0;  // y_m of the training data
  double roi_cap = 0.0;
  StepPooledNet net;

  EvaluatorModel(int horizon, int feature_dim, double condition_scale, double roi_cap,
                 const EvaluatorConfig& config);

  double lipschitz_budget() const;  // sqrt(T) * R_m
  std::vector<double> encode(std::span<const double> costs, std::span<const double> feature,
                             double budget) const;
};

double score(const EvaluatorModel& model, const Trajectory& trajectory);
double score_costs(const EvaluatorModel& model, std::span<const double> costs,
                   std::span<const double> feature, double budget);

struct EvaluatorBatch {
  std::vector<LabeledSample> labeled;
  std::vector<std::pair<Trajectory, Trajectory>> pairs;
};

struct EvaluatorLoss {
  double total = 0.0;    // mse / y_m^2 + beta1 * penalty / y_m
  double mse = 0.0;      // raw quality units squared
  double penalty = 0.0;  // mean hinge, raw quality units
  ParamVector grad;
};

EvaluatorLoss evaluator_loss(const EvaluatorModel& model, const EvaluatorBatch& batch,
                             double beta1);

struct PairRatio {
  double distance = 0.0;
  double delta = 0.0;
  double ratio = 0.0;
  bool violated = false;
};

struct LipschitzEstimate {
  double l_hat = 0.0;
  double k_hat = 0.0;
  double violation_rate = 0.0;
  std::vector<PairRatio> pairs;  // zero-distance pairs omitted
};

// Same-profile random pairs; a pair violates when its ratio exceeds sqrt(T) * R_m.
LipschitzEstimate estimate_lipschitz(const EvaluatorModel& model, const OfflineDataset& dataset,
                                     int n_pairs, Rng& rng);

struct EvaluatorReport {
  double train_mse = 0.0;
  double delta_d = 0.0;  // sqrt(train_mse)
  double l_hat = 0.0;
  double k_hat = 0.0;
  double pair_violation_rate = 0.0;
  int steps = 0;
};

struct EvaluatorStepLog {
  int step = 0;
  double loss = 0.0;
  double mse = 0.0;
  double penalty = 0.0;
  double grad_norm = 0.0;
};

struct EvaluatorTraining {
  EvaluatorReport report;
  std::vector<EvaluatorStepLog> log;
};

// Throws TrainingDiverged on a non-finite loss or gradient.
EvaluatorTraining train_evaluator(EvaluatorModel& model, const OfflineDataset& dataset,
                                  const EvaluatorConfig& config, Rng& rng);

double dataset_mse(const EvaluatorModel& model, const OfflineDataset& dataset);

Checkpoint evaluator_checkpoint(const EvaluatorModel& model, const EvaluatorConfig& config);
EvaluatorModel evaluator_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace bidplan
