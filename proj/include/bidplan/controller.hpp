#pragma once

#include <functional>
#include <span>
#include <vector>

#include "bidplan/dataset.hpp"
#include "bidplan/env.hpp"
#include "bidplan/grad/checkpoint.hpp"
#include "bidplan/grad/networks.hpp"
#include "bidplan/planner.hpp"
#include "bidplan/rng.hpp"

namespace bidplan {

// Input: [t / T, c_{t-1} * T / B, planned c_t * T / B, remaining / B, feature...].
inline constexpr int kControllerExtras = 4;

struct ControllerConfig {
  std::vector<int> hidden{32, 32};
  Activation activation = Activation::tanh;
  int steps = 4000;
  int batch_size = 256;
  double learning_rate = 1e-2;
  double lr_floor = 0.05;
  double clip_norm = 10.0;
  double holdout_fraction = 0.1;

  void validate() const;
};

// action = action_scale * softplus(net(input)), so actions are never negative.
struct InverseDynamicsModel {
  int horizon = 0;
  int feature_dim = 0;
  double action_scale = 1.0;
  DenseNet net;

  InverseDynamicsModel(int horizon, int feature_dim, double action_scale,
                       const ControllerConfig& config);

  std::vector<double> encode(const BidState& state, double planned_cost, double budget) const;
};

double act(const InverseDynamicsModel& model, const BidState& state, double planned_cost,
           double budget);

struct ControllerReport {
  double train_mse = 0.0;
  double holdout_mse = 0.0;
  double action_variance = 0.0;  // over holdout samples
  std::size_t train_samples = 0;
  std::size_t holdout_samples = 0;
};

struct ControllerTraining {
  ControllerReport report;
  std::vector<double> loss_log;
};

// Sets action_scale to the mean dataset action, initializes the network and
// regresses a_t on (s_t, c_t) with a per-trajectory holdout split.
ControllerTraining train_inverse_dynamics(InverseDynamicsModel& model,
                                          const OfflineDataset& dataset,
                                          const ControllerConfig& config, Rng& rng);

// Maps the realized state and cost history to a planned cost for step t (raw units).
using PlanFn = std::function<double(const BidState&, std::span<const double>)>;
// Maps the realized state and the planned cost to an action.
using ControlFn = std::function<double(const BidState&, double)>;

Policy compose_planning_policy(PlanFn plan, ControlFn control);

// Replans every step from the realized history at condition y_star, takes the
// zero-noise mean of the next cost clipped to [0, remaining], and asks the controller
// for the action. Both models must outlive the policy.
Policy planning_policy(const PlannerModel& planner, const InverseDynamicsModel& controller,
                       const AdvertiserProfile& profile, double y_star);

Checkpoint controller_checkpoint(const InverseDynamicsModel& model, const ControllerConfig& config);
InverseDynamicsModel controller_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace bidplan
