#include "bidplan/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bidplan/grad/adam.hpp"
#include "bidplan/training.hpp"

namespace bidplan {

void EvaluatorConfig::validate() const {
  if (!(beta1 >= 0.0)) throw std::invalid_argument("evaluator: beta1 must be >= 0");
  if (steps < 0 || batch_size < 1 || pair_batch < 0) {
    throw std::invalid_argument("evaluator: invalid step or batch sizes");
  }
  if (!(perturbed_fraction >= 0.0 && perturbed_fraction <= 1.0)) {
    throw std::invalid_argument("evaluator: perturbed_fraction must lie in [0, 1]");
  }
  if (!(learning_rate > 0.0) || !(lr_floor >= 0.0 && lr_floor <= 1.0)) {
    throw std::invalid_argument("evaluator: invalid learning-rate schedule");
  }
  if (lipschitz_pairs < 2) throw std::invalid_argument("evaluator: lipschitz_pairs must be >= 2");
}

EvaluatorModel::EvaluatorModel(int horizon_, int feature_dim_, double condition_scale_,
                               double roi_cap_, const EvaluatorConfig& config)
    : horizon(horizon_),
      feature_dim(feature_dim_),
      condition_scale(condition_scale_),
      roi_cap(roi_cap_),
      net(horizon_, kEvaluatorStepExtras + feature_dim_, config.hidden, config.activation) {
  if (!(condition_scale > 0.0)) {
    throw std::invalid_argument("evaluator: condition scale (y_m) must be positive");
  }
}

double EvaluatorModel::lipschitz_budget() const { return std::sqrt(horizon) * roi_cap; }

std::vector<double> EvaluatorModel::encode(std::span<const double> costs,
                                           std::span<const double> feature, double budget) const {
  if (static_cast<int>(costs.size()) != horizon) {
    throw std::domain_error("evaluator: trajectory horizon " + std::to_string(costs.size()) +
                            " does not match model horizon " + std::to_string(horizon));
  }
  if (static_cast<int>(feature.size()) != feature_dim) {
    throw std::domain_error("evaluator: feature dimension mismatch");
  }
  const double per_step = budget > 0.0 ? horizon / budget : 0.0;
  const double per_budget = budget > 0.0 ? 1.0 / budget : 0.0;
  const auto row = static_cast<std::size_t>(kEvaluatorStepExtras + feature_dim);
  std::vector<double> out(static_cast<std::size_t>(horizon) * row);
  double spent = 0.0;
  for (int t = 0; t < horizon; ++t) {
    double* r = out.data() + static_cast<std::size_t>(t) * row;
    const double c = costs[static_cast<std::size_t>(t)];
    r[0] = c * per_step;
    r[1] = spent * per_budget;
    r[2] = static_cast<double>(t) / horizon;
    std::copy(feature.begin(), feature.end(), r + kEvaluatorStepExtras);
    spent += c;
  }
  return out;
}

double score_costs(const EvaluatorModel& model, std::span<const double> costs,
                   std::span<const double> feature, double budget) {
  return model.condition_scale * model.net.forward(model.encode(costs, feature, budget))[0];
}

double score(const EvaluatorModel& model, const Trajectory& trajectory) {
  return score_costs(model, trajectory.costs, trajectory.feature, trajectory.budget);
}

EvaluatorLoss evaluator_loss(const EvaluatorModel& model, const EvaluatorBatch& batch,
                             double beta1) {
  if (batch.labeled.empty() && batch.pairs.empty()) {
    throw std::domain_error("evaluator_loss: empty batch");
  }
  if (!(beta1 >= 0.0)) throw std::domain_error("evaluator_loss: beta1 must be >= 0");
  const double ym = model.condition_scale;
  EvaluatorLoss out;
  out.grad = model.net.params().zeros_like();
  std::span<double> grad(out.grad.values);

  if (!batch.labeled.empty()) {
    const double n = static_cast<double>(batch.labeled.size());
    for (const LabeledSample& s : batch.labeled) {
      const Trajectory& t = *s.trajectory;
      const std::vector<double> x = model.encode(t.costs, t.feature, t.budget);
      const double pred = ym * model.net.forward(x)[0];
      const double err = pred - s.condition;
      out.mse += err * err / n;
      // d/dparams of err^2 / (n ym^2) with pred = ym * net.
      model.net.accumulate(x, 2.0 * err / (n * ym), grad, {});
    }
  }

  if (!batch.pairs.empty()) {
    const double n = static_cast<double>(batch.pairs.size());
    const double budget = model.lipschitz_budget();
    for (const auto& [a, b] : batch.pairs) {
      const std::vector<double> xa = model.encode(a.costs, a.feature, a.budget);
      const std::vector<double> xb = model.encode(b.costs, b.feature, b.budget);
      const double diff = ym * (model.net.forward(xa)[0] - model.net.forward(xb)[0]);
      const double slack = std::abs(diff) - budget * trajectory_distance(a, b);
      if (slack <= 0.0) continue;
      out.penalty += slack / n;
      if (beta1 == 0.0) continue;
      // d/dparams of beta1 * slack / (n ym): sign(diff) * ym * (grad_a - grad_b).
      const double w = beta1 * (diff > 0.0 ? 1.0 : -1.0) / n;
      model.net.accumulate(xa, w, grad, {});
      model.net.accumulate(xb, -w, grad, {});
    }
  }
  out.total = out.mse / (ym * ym) + beta1 * out.penalty / ym;
  return out;
}

LipschitzEstimate estimate_lipschitz(const EvaluatorModel& model, const OfflineDataset& dataset,
                                     int n_pairs, Rng& rng) {
  if (n_pairs < 2) throw std::domain_error("estimate_lipschitz: n_pairs must be >= 2");
  const auto pairs = sample_pairs(dataset, n_pairs, PairMode::random, rng);
  const double budget = model.lipschitz_budget();
  LipschitzEstimate est;
  int violated = 0;
  for (const auto& [a, b] : pairs) {
    const double d = trajectory_distance(a, b);
    if (d == 0.0) continue;
    PairRatio r;
    r.distance = d;
    r.delta = std::abs(score(model, a) - score(model, b));
    r.ratio = r.delta / d;
    r.violated = r.ratio > budget;
    violated += r.violated ? 1 : 0;
    est.l_hat = std::max(est.l_hat, r.ratio);
    est.pairs.push_back(r);
  }
  if (est.pairs.empty()) throw std::domain_error("estimate_lipschitz: all sampled pairs coincide");
  est.k_hat = est.l_hat / budget;
  est.violation_rate = static_cast<double>(violated) / static_cast<double>(est.pairs.size());
  return est;
}

double dataset_mse(const EvaluatorModel& model, const OfflineDataset& dataset) {
  if (dataset.empty()) throw std::domain_error("dataset_mse: empty dataset");
  double sum = 0.0;
  for (const Trajectory& t : dataset.trajectories) {
    const double err = score(model, t) - t.quality;
    sum += err * err;
  }
  return sum / static_cast<double>(dataset.size());
}

namespace {

EvaluatorBatch draw_batch(const OfflineDataset& dataset, const EvaluatorConfig& config,
                          bool have_random_pairs, Rng& rng) {
  EvaluatorBatch batch;
  batch.labeled = sample_batch(dataset, config.batch_size, rng);
  if (config.pair_batch == 0 || dataset.size() < 2) return batch;
  int perturbed = static_cast<int>(std::lround(config.perturbed_fraction * config.pair_batch));
  if (!have_random_pairs) perturbed = config.pair_batch;
  const int random = config.pair_batch - perturbed;
  if (random > 0) batch.pairs = sample_pairs(dataset, random, PairMode::random, rng);
  if (perturbed > 0) {
    auto more = sample_pairs(dataset, perturbed, PairMode::perturbed, rng, config.perturb_scale);
    batch.pairs.insert(batch.pairs.end(), std::make_move_iterator(more.begin()),
                       std::make_move_iterator(more.end()));
  }
  return batch;
}

}  // namespace

EvaluatorTraining train_evaluator(EvaluatorModel& model, const OfflineDataset& dataset,
                                  const EvaluatorConfig& config, Rng& rng) {
  config.validate();
  if (dataset.empty()) throw std::domain_error("train_evaluator: empty dataset");

  bool have_random_pairs = false;
  for (const auto& [id, members] : dataset.by_profile()) {
    have_random_pairs = have_random_pairs || members.size() >= 2;
  }

  // Start the output bias at the mean normalized quality.
  double mean_quality = 0.0;
  for (const Trajectory& t : dataset.trajectories) mean_quality += t.quality;
  mean_quality /= static_cast<double>(dataset.size());
  const std::size_t last_layer = model.net.mlp().sizes().size() - 1;
  model.net.params().group("step.b" + std::to_string(last_layer))[0] =
      mean_quality / model.condition_scale;

  AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  adam_config.clip_norm = config.clip_norm;
  Adam adam(adam_config, model.net.params().size());

  EvaluatorTraining out;
  out.log.reserve(static_cast<std::size_t>(config.steps));
  for (int step = 0; step < config.steps; ++step) {
    const EvaluatorBatch batch = draw_batch(dataset, config, have_random_pairs, rng);
    EvaluatorLoss loss = evaluator_loss(model, batch, config.beta1);
    if (!std::isfinite(loss.total) || !loss.grad.all_finite()) {
      throw TrainingDiverged("evaluator loss", step, model.net.params());
    }
    adam.set_learning_rate(
        cosine_learning_rate(config.learning_rate, config.lr_floor, step, config.steps));
    adam.step(model.net.params(), loss.grad);
    out.log.push_back({step, loss.total, loss.mse, loss.penalty, loss.grad.norm()});
  }

  out.report.steps = config.steps;
  out.report.train_mse = dataset_mse(model, dataset);
  out.report.delta_d = std::sqrt(out.report.train_mse);
  if (dataset.size() >= 2 && have_random_pairs) {
    const LipschitzEstimate est = estimate_lipschitz(model, dataset, config.lipschitz_pairs, rng);
    out.report.l_hat = est.l_hat;
    out.report.k_hat = est.k_hat;
    out.report.pair_violation_rate = est.violation_rate;
  }
  return out;
}

Checkpoint evaluator_checkpoint(const EvaluatorModel& model, const EvaluatorConfig& config) {
  Checkpoint ck;
  ck.params = model.net.params();
  ck.meta["model"] = "evaluator";
  ck.meta["horizon"] = std::to_string(model.horizon);
  ck.meta["feature_dim"] = std::to_string(model.feature_dim);
  ck.meta["condition_scale"] = real_text(model.condition_scale);
  ck.meta["roi_cap"] = real_text(model.roi_cap);
  ck.meta["hidden"] = ints_text(config.hidden);
  ck.meta["activation"] = to_string(config.activation);
  return ck;
}

EvaluatorModel evaluator_from_checkpoint(const Checkpoint& checkpoint) {
  if (meta_value(checkpoint, "model") != "evaluator") {
    throw std::runtime_error("checkpoint does not hold an evaluator");
  }
  EvaluatorConfig config;
  config.hidden = meta_ints(checkpoint, "hidden");
  config.activation = activation_from_string(meta_value(checkpoint, "activation"));
  EvaluatorModel model(meta_int(checkpoint, "horizon"), meta_int(checkpoint, "feature_dim"),
                       meta_real(checkpoint, "condition_scale"), meta_real(checkpoint, "roi_cap"),
                       config);
  if (!model.net.params().same_layout(checkpoint.params)) {
    throw std::runtime_error("evaluator checkpoint layout does not match its architecture");
  }
  model.net.params() = checkpoint.params;
  return model;
}

}  // namespace bidplan
