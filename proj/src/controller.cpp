#include "bidplan/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bidplan/grad/adam.hpp"
#include "bidplan/training.hpp"

namespace bidplan {

void ControllerConfig::validate() const {
  if (steps < 0 || batch_size < 1) throw std::invalid_argument("controller: invalid step/batch");
  if (!(learning_rate > 0.0) || !(lr_floor >= 0.0 && lr_floor <= 1.0)) {
    throw std::invalid_argument("controller: invalid learning-rate schedule");
  }
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw std::invalid_argument("controller: holdout_fraction must lie in [0, 1)");
  }
}

namespace {

std::vector<int> controller_sizes(int feature_dim, const std::vector<int>& hidden) {
  std::vector<int> sizes{kControllerExtras + feature_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

}  // namespace

InverseDynamicsModel::InverseDynamicsModel(int horizon_, int feature_dim_, double action_scale_,
                                           const ControllerConfig& config)
    : horizon(horizon_),
      feature_dim(feature_dim_),
      action_scale(action_scale_),
      net(controller_sizes(feature_dim_, config.hidden), config.activation,
          OutputTransform::softplus) {
  if (horizon < 1) throw std::invalid_argument("controller: horizon must be >= 1");
  if (!(action_scale > 0.0)) throw std::invalid_argument("controller: action_scale must be > 0");
}

std::vector<double> InverseDynamicsModel::encode(const BidState& state, double planned_cost,
                                                 double budget) const {
  if (static_cast<int>(state.feature.size()) != feature_dim) {
    throw std::domain_error("controller: feature dimension mismatch");
  }
  const double per_step = budget > 0.0 ? horizon / budget : 0.0;
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(kControllerExtras + feature_dim));
  x.push_back(static_cast<double>(state.t) / horizon);
  x.push_back(state.prev_cost * per_step);
  x.push_back(planned_cost * per_step);
  x.push_back(budget > 0.0 ? state.remaining_budget / budget : 0.0);
  x.insert(x.end(), state.feature.begin(), state.feature.end());
  return x;
}

double act(const InverseDynamicsModel& model, const BidState& state, double planned_cost,
           double budget) {
  return model.action_scale * model.net.forward(model.encode(state, planned_cost, budget))[0];
}

namespace {

struct Sample {
  std::vector<double> input;
  double target = 0.0;  // action / action_scale
};

std::vector<Sample> collect(const InverseDynamicsModel& model, const OfflineDataset& dataset,
                            const std::vector<std::size_t>& indices) {
  std::vector<Sample> out;
  for (std::size_t i : indices) {
    const Trajectory& tr = dataset.trajectories[i];
    const std::vector<BidState> states = tr.states();
    for (std::size_t t = 0; t < states.size(); ++t) {
      out.push_back({model.encode(states[t], tr.costs[t], tr.budget),
                     tr.actions[t] / model.action_scale});
    }
  }
  return out;
}

double mse_of(const InverseDynamicsModel& model, const std::vector<Sample>& samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const Sample& s : samples) {
    const double err = model.action_scale * (model.net.forward(s.input)[0] - s.target);
    sum += err * err;
  }
  return sum / static_cast<double>(samples.size());
}

}  // namespace

ControllerTraining train_inverse_dynamics(InverseDynamicsModel& model,
                                          const OfflineDataset& dataset,
                                          const ControllerConfig& config, Rng& rng) {
  config.validate();
  if (dataset.empty()) throw std::domain_error("train_inverse_dynamics: empty dataset");

  double action_sum = 0.0;
  std::size_t action_count = 0;
  for (const Trajectory& t : dataset.trajectories) {
    for (double a : t.actions) action_sum += a;
    action_count += t.actions.size();
  }
  const double mean_action = action_count > 0 ? action_sum / static_cast<double>(action_count) : 0.0;
  model.action_scale = mean_action > 0.0 ? mean_action : 1.0;
  model.net.init(rng, 0.1);
  // softplus(0.5413) = 1: start at the mean action.
  const std::size_t last = model.net.mlp().sizes().size() - 1;
  model.net.params().group("dense.b" + std::to_string(last))[0] = std::log(std::expm1(1.0));

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_holdout =
      static_cast<std::size_t>(std::floor(config.holdout_fraction * static_cast<double>(order.size())));
  if (n_holdout == 0 && config.holdout_fraction > 0.0 && order.size() >= 2) n_holdout = 1;
  const std::vector<std::size_t> holdout_idx(order.begin(),
                                             order.begin() + static_cast<std::ptrdiff_t>(n_holdout));
  const std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_holdout),
                                           order.end());
  const std::vector<Sample> train = collect(model, dataset, train_idx);
  const std::vector<Sample> holdout = collect(model, dataset, holdout_idx);

  AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  adam_config.clip_norm = config.clip_norm;
  Adam adam(adam_config, model.net.params().size());

  ControllerTraining out;
  out.loss_log.reserve(static_cast<std::size_t>(config.steps));
  const double n = config.batch_size;
  for (int step = 0; step < config.steps && !train.empty(); ++step) {
    ParamVector grad = model.net.params().zeros_like();
    double loss = 0.0;
    for (int b = 0; b < config.batch_size; ++b) {
      const Sample& s = train[uniform_index(rng, train.size())];
      const double pred = model.net.forward(s.input)[0];
      const double err = pred - s.target;
      loss += err * err / n;
      const double up[1] = {2.0 * err / n};
      grad += model.net.backward(s.input, up).params;
    }
    if (!std::isfinite(loss) || !grad.all_finite()) {
      throw TrainingDiverged("controller loss", step, model.net.params());
    }
    adam.set_learning_rate(
        cosine_learning_rate(config.learning_rate, config.lr_floor, step, config.steps));
    adam.step(model.net.params(), grad);
    out.loss_log.push_back(loss);
  }

  out.report.train_samples = train.size();
  out.report.holdout_samples = holdout.size();
  out.report.train_mse = mse_of(model, train);
  out.report.holdout_mse = mse_of(model, holdout);
  if (!holdout.empty()) {
    double mean = 0.0;
    for (const Sample& s : holdout) mean += s.target * model.action_scale;
    mean /= static_cast<double>(holdout.size());
    double var = 0.0;
    for (const Sample& s : holdout) {
      const double d = s.target * model.action_scale - mean;
      var += d * d;
    }
    out.report.action_variance = var / static_cast<double>(holdout.size());
  }
  return out;
}

Policy compose_planning_policy(PlanFn plan, ControlFn control) {
  return [plan = std::move(plan), control = std::move(control)](
             const BidState& state, std::span<const double> history) {
    return control(state, plan(state, history));
  };
}

Policy planning_policy(const PlannerModel& planner, const InverseDynamicsModel& controller,
                       const AdvertiserProfile& profile, double y_star) {
  const double budget = profile.budget;
  const int horizon = planner.horizon();
  PlanFn plan = [&planner, budget, horizon, y_star](const BidState& state,
                                                    std::span<const double> history) {
    const std::vector<double> units = normalize_costs(history, budget, horizon);
    const double u = planner.mean(state.t, units, y_star, state.feature);
    return std::clamp(u * budget / horizon, 0.0, state.remaining_budget);
  };
  ControlFn control = [&controller, budget](const BidState& state, double planned) {
    return act(controller, state, planned, budget);
  };
  return compose_planning_policy(std::move(plan), std::move(control));
}

Checkpoint controller_checkpoint(const InverseDynamicsModel& model, const ControllerConfig& config) {
  Checkpoint ck;
  ck.params = model.net.params();
  ck.meta["model"] = "controller";
  ck.meta["horizon"] = std::to_string(model.horizon);
  ck.meta["feature_dim"] = std::to_string(model.feature_dim);
  ck.meta["action_scale"] = real_text(model.action_scale);
  ck.meta["hidden"] = ints_text(config.hidden);
  ck.meta["activation"] = to_string(config.activation);
  return ck;
}

InverseDynamicsModel controller_from_checkpoint(const Checkpoint& checkpoint) {
  if (meta_value(checkpoint, "model") != "controller") {
    throw std::runtime_error("checkpoint does not hold a controller");
  }
  ControllerConfig config;
  config.hidden = meta_ints(checkpoint, "hidden");
  config.activation = activation_from_string(meta_value(checkpoint, "activation"));
  InverseDynamicsModel model(meta_int(checkpoint, "horizon"), meta_int(checkpoint, "feature_dim"),
                             meta_real(checkpoint, "action_scale"), config);
  if (!model.net.params().same_layout(checkpoint.params)) {
    throw std::runtime_error("controller checkpoint layout does not match its architecture");
  }
  model.net.params() = checkpoint.params;
  return model;
}

}  // namespace bidplan
