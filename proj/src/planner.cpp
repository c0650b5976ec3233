#include "bidplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "bidplan/grad/adam.hpp"
#include "bidplan/training.hpp"

namespace bidplan {

std::vector<double> normalize_costs(std::span<const double> costs, double budget, int horizon) {
  const double f = budget > 0.0 ? horizon / budget : 0.0;
  std::vector<double> out(costs.size());
  for (std::size_t i = 0; i < costs.size(); ++i) out[i] = costs[i] * f;
  return out;
}

std::vector<double> denormalize_costs(std::span<const double> units, double budget, int horizon) {
  const double f = budget / horizon;
  std::vector<double> out(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) out[i] = units[i] * f;
  return out;
}

PlannerModel::PlannerModel(const CausalNetConfig& net, double sigma, double condition_scale)
    : net_(make_causal_net(net)), sigma_(sigma), condition_scale_(condition_scale) {
  if (!(sigma > 0.0)) throw std::domain_error("planner: sigma must be positive");
  if (!(condition_scale > 0.0)) throw std::domain_error("planner: condition scale must be positive");
}

PlannerModel::PlannerModel(const PlannerModel& other)
    : net_(other.net_->clone()), sigma_(other.sigma_), condition_scale_(other.condition_scale_) {}

PlannerModel& PlannerModel::operator=(const PlannerModel& other) {
  if (this != &other) {
    net_ = other.net_->clone();
    sigma_ = other.sigma_;
    condition_scale_ = other.condition_scale_;
  }
  return *this;
}

double PlannerModel::mean(int t, std::span<const double> prefix, double y,
                          std::span<const double> feature) const {
  return net_->mean_at(t, prefix, normalize_condition(y), feature);
}

std::vector<PlanContext> dataset_contexts(const OfflineDataset& dataset) {
  std::vector<PlanContext> out;
  for (const auto& [id, members] : dataset.by_profile()) {
    const Trajectory& t = dataset.trajectories[members.front()];
    out.push_back({t.feature, t.budget});
  }
  return out;
}

std::vector<double> generate(const PlannerModel& model, double y, std::span<const double> history,
                             std::span<const double> feature, std::span<const double> noise) {
  const int horizon = model.horizon();
  if (static_cast<int>(history.size()) > horizon) {
    throw std::domain_error("generate: history longer than the horizon");
  }
  if (!(y >= 0.0)) throw std::domain_error("generate: condition must be >= 0");
  const std::size_t start = history.size();
  if (noise.size() < static_cast<std::size_t>(horizon) - start) {
    throw std::domain_error("generate: noise does not cover the remaining steps");
  }
  std::vector<double> u(history.begin(), history.end());
  u.resize(static_cast<std::size_t>(horizon), 0.0);
  for (std::size_t i = start; i < u.size(); ++i) {
    const int t = static_cast<int>(i) + 1;
    u[i] = model.mean(t, u, y, feature) + model.sigma() * noise[i - start];
  }
  return u;
}

std::vector<double> draw_noise(int length, Rng& rng) {
  std::vector<double> eta(static_cast<std::size_t>(length));
  for (double& e : eta) e = standard_normal(rng);
  return eta;
}

namespace {

void check_sequence(const PlannerModel& model, std::span<const double> units) {
  if (static_cast<int>(units.size()) != model.horizon()) {
    throw std::domain_error("planner: sequence length " + std::to_string(units.size()) +
                            " does not match horizon " + std::to_string(model.horizon()));
  }
  if (!(model.sigma() > 0.0)) throw std::domain_error("planner: sigma must be positive");
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double std_error_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

}  // namespace

double log_prob(const PlannerModel& model, std::span<const double> units, double y,
                std::span<const double> feature) {
  check_sequence(model, units);
  const double s = model.sigma();
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi) - std::log(s);
  double total = 0.0;
  for (int t = 1; t <= model.horizon(); ++t) {
    const double r = (units[static_cast<std::size_t>(t - 1)] - model.mean(t, units, y, feature)) / s;
    total += log_norm - 0.5 * r * r;
  }
  return total;
}

void accumulate_log_prob_grad(const PlannerModel& model, std::span<const double> units, double y,
                              std::span<const double> feature, double scale,
                              std::span<double> grad) {
  check_sequence(model, units);
  const double inv_var = 1.0 / (model.sigma() * model.sigma());
  const double yn = model.normalize_condition(y);
  for (int t = 1; t <= model.horizon(); ++t) {
    const double mu = model.net().mean_at(t, units, yn, feature);
    const double up = scale * (units[static_cast<std::size_t>(t - 1)] - mu) * inv_var;
    if (up != 0.0) model.net().backward_at(t, units, yn, feature, up, grad, {});
  }
}

PlannerObjective bc_loss(const PlannerModel& model, std::span<const LabeledSample> batch) {
  if (batch.empty()) throw std::domain_error("bc_loss: empty batch");
  PlannerObjective out;
  out.grad = model.params().zeros_like();
  const double n = static_cast<double>(batch.size());
  std::vector<double> per_item;
  per_item.reserve(batch.size());
  for (const LabeledSample& s : batch) {
    const Trajectory& t = *s.trajectory;
    const std::vector<double> u = normalize_costs(t.costs, t.budget, model.horizon());
    per_item.push_back(-log_prob(model, u, s.condition, t.feature));
    accumulate_log_prob_grad(model, u, s.condition, t.feature, -1.0 / n, out.grad.values);
  }
  out.value = mean_of(per_item);
  out.std_error = std_error_of(per_item);
  return out;
}

std::vector<double> budget_projection(std::span<const double> costs, double budget) {
  std::vector<double> out(costs.size());
  double remaining = budget;
  for (std::size_t t = 0; t < costs.size(); ++t) {
    out[t] = std::clamp(costs[t], 0.0, remaining);
    remaining -= out[t];
  }
  return out;
}

PlanScorer evaluator_scorer(const EvaluatorModel& evaluator, bool project) {
  return [&evaluator, project](std::span<const double> units, const PlanContext& context) {
    std::vector<double> costs =
        denormalize_costs(units, context.budget, static_cast<int>(units.size()));
    if (project) costs = budget_projection(costs, context.budget);
    return score_costs(evaluator, costs, context.feature, context.budget);
  };
}

void ScoreBaseline::update(std::size_t context, double batch_mean) {
  if (context >= values.size()) {
    values.resize(context + 1, 0.0);
    initialized.resize(context + 1, false);
  }
  if (!initialized[context]) {
    values[context] = batch_mean;
    initialized[context] = true;
  } else {
    values[context] = decay * values[context] + (1.0 - decay) * batch_mean;
  }
}

PlannerObjective score_gradient(const PlannerModel& model, const PlanScorer& scorer,
                                double y_star, std::span<const PlanContext> contexts,
                                int n_rollouts, ScoreBaseline& baseline, Rng& rng) {
  if (n_rollouts < 1) throw std::domain_error("score_gradient: n_rollouts must be >= 1");
  if (contexts.empty()) throw std::domain_error("score_gradient: no planning contexts");
  const int horizon = model.horizon();
  const auto n = static_cast<std::size_t>(n_rollouts);
  std::vector<std::vector<double>> seqs(n);
  std::vector<std::vector<double>> etas(n);
  std::vector<std::size_t> ctx(n);
  std::vector<double> scores(n);
  const std::size_t offset = uniform_index(rng, contexts.size());
  for (std::size_t i = 0; i < n; ++i) {
    ctx[i] = (offset + i) % contexts.size();
    etas[i] = draw_noise(horizon, rng);
    seqs[i] = generate(model, y_star, {}, contexts[ctx[i]].feature, etas[i]);
    scores[i] = scorer(seqs[i], contexts[ctx[i]]);
    if (!std::isfinite(scores[i])) {
      throw std::domain_error("score_gradient: scorer returned a non-finite value");
    }
  }
  PlannerObjective out;
  out.value = mean_of(scores);
  out.std_error = std_error_of(scores);
  out.grad = model.params().zeros_like();
  std::vector<double> sums(contexts.size(), 0.0);
  std::vector<int> counts(contexts.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    sums[ctx[i]] += scores[i];
    ++counts[ctx[i]];
  }
  std::vector<double> b(contexts.size(), 0.0);
  for (std::size_t c = 0; c < contexts.size(); ++c) {
    if (counts[c] > 0) b[c] = baseline.has(c) ? baseline.value(c) : sums[c] / counts[c];
  }
  const double yn = model.normalize_condition(y_star);
  const double inv_sigma = 1.0 / model.sigma();
  for (std::size_t i = 0; i < n; ++i) {
    const double advantage = (scores[i] - b[ctx[i]]) / static_cast<double>(n);
    if (advantage == 0.0) continue;
    const std::vector<double>& u = seqs[i];
    for (int t = 1; t <= horizon; ++t) {
      // d log N(u_t; mu_t, sigma) / d mu_t = (u_t - mu_t) / sigma^2 = eta_t / sigma.
      const double up = advantage * etas[i][static_cast<std::size_t>(t - 1)] * inv_sigma;
      model.net().backward_at(t, u, yn, contexts[ctx[i]].feature, up, out.grad.values, {});
    }
  }
  for (std::size_t c = 0; c < contexts.size(); ++c) {
    if (counts[c] > 0) baseline.update(c, sums[c] / counts[c]);
  }
  return out;
}

std::vector<std::vector<double>> rollouts(const PlannerModel& model, double y,
                                          std::span<const double> feature,
                                          const std::vector<std::vector<double>>& noise) {
  std::vector<std::vector<double>> out;
  out.reserve(noise.size());
  for (const auto& eta : noise) out.push_back(generate(model, y, {}, feature, eta));
  return out;
}

namespace {

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

CoupledEstimate coupled_w1(const PlannerModel& model, double y1, double y2,
                           std::span<const double> feature, int n_noise, bool shared, Rng& rng) {
  if (n_noise < 1) throw std::domain_error("coupled W1: n_noise must be >= 1");
  CoupledEstimate out;
  out.samples.reserve(static_cast<std::size_t>(n_noise));
  for (int k = 0; k < n_noise; ++k) {
    const std::vector<double> eta1 = draw_noise(model.horizon(), rng);
    const std::vector<double> eta2 = shared ? eta1 : draw_noise(model.horizon(), rng);
    const std::vector<double> a = generate(model, y1, {}, feature, eta1);
    const std::vector<double> b = y1 == y2 && shared ? a : generate(model, y2, {}, feature, eta2);
    out.samples.push_back(l1_distance(a, b));
  }
  out.mean = mean_of(out.samples);
  out.std_error = std_error_of(out.samples);
  return out;
}

}  // namespace

CoupledEstimate sync_coupled_w1(const PlannerModel& model, double y1, double y2,
                                std::span<const double> feature, int n_noise, Rng& rng) {
  return coupled_w1(model, y1, y2, feature, n_noise, true, rng);
}

CoupledEstimate independent_coupled_w1(const PlannerModel& model, double y1, double y2,
                                       std::span<const double> feature, int n_noise, Rng& rng) {
  return coupled_w1(model, y1, y2, feature, n_noise, false, rng);
}

void backprop_rollout(const PlannerModel& model, std::span<const double> units, double y,
                      std::span<const double> feature, std::span<double> lambda, int start,
                      std::span<double> grad) {
  const int horizon = model.horizon();
  if (static_cast<int>(units.size()) != horizon || static_cast<int>(lambda.size()) != horizon) {
    throw std::domain_error("backprop_rollout: sequence length does not match horizon");
  }
  const double yn = model.normalize_condition(y);
  // u_t = mu_t(u_1..u_{t-1}) + sigma * eta_t, so dL/dmu_t = lambda_t once all later
  // steps have pushed their contributions back into lambda_t.
  for (int t = horizon; t > start; --t) {
    const double up = lambda[static_cast<std::size_t>(t - 1)];
    if (up == 0.0) continue;
    model.net().backward_at(t, units, yn, feature, up, grad, lambda);
  }
}

PlannerObjective lipschitz_penalty(const PlannerModel& model, std::span<const double> pool,
                                   double y_star, const PenaltyConfig& config,
                                   std::span<const PlanContext> contexts, Rng& rng) {
  if (config.pairs < 1 || config.n_noise < 1) {
    throw std::domain_error("lipschitz_penalty: pairs and n_noise must be >= 1");
  }
  if (!(config.lp > 0.0)) throw std::domain_error("lipschitz_penalty: lp must be positive");
  if (contexts.empty()) throw std::domain_error("lipschitz_penalty: no planning contexts");
  std::vector<double> conditions(pool.begin(), pool.end());
  conditions.push_back(y_star);
  if (std::set<double>(conditions.begin(), conditions.end()).size() < 2) {
    throw std::domain_error("lipschitz_penalty: need at least two distinct conditions");
  }

  PlannerObjective out;
  out.grad = model.params().zeros_like();
  const int horizon = model.horizon();
  const double n_pairs = config.pairs;
  const double n_noise = config.n_noise;
  std::vector<double> hinges;
  for (int k = 0; k < config.pairs; ++k) {
    const double y1 = k % 2 == 0 ? y_star : conditions[uniform_index(rng, conditions.size())];
    const double y2 = conditions[uniform_index(rng, conditions.size())];
    const PlanContext& ctx = contexts[uniform_index(rng, contexts.size())];
    std::vector<std::vector<double>> a;
    std::vector<std::vector<double>> b;
    double w1 = 0.0;
    for (int m = 0; m < config.n_noise; ++m) {
      const std::vector<double> eta = draw_noise(horizon, rng);
      a.push_back(generate(model, y1, {}, ctx.feature, eta));
      b.push_back(y1 == y2 ? a.back() : generate(model, y2, {}, ctx.feature, eta));
      w1 += l1_distance(a.back(), b.back()) / n_noise;
    }
    const double gap = std::abs(model.normalize_condition(y1) - model.normalize_condition(y2));
    const double hinge = std::max(0.0, w1 - config.lp * gap);
    hinges.push_back(hinge);
    if (hinge <= 0.0) continue;
    std::vector<double> la(static_cast<std::size_t>(horizon));
    std::vector<double> lb(static_cast<std::size_t>(horizon));
    for (int m = 0; m < config.n_noise; ++m) {
      const auto& ua = a[static_cast<std::size_t>(m)];
      const auto& ub = b[static_cast<std::size_t>(m)];
      for (std::size_t i = 0; i < la.size(); ++i) {
        const double d = ua[i] - ub[i];
        const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        la[i] = s / (n_pairs * n_noise);
        lb[i] = -la[i];
      }
      backprop_rollout(model, ua, y1, ctx.feature, la, 0, out.grad.values);
      backprop_rollout(model, ub, y2, ctx.feature, lb, 0, out.grad.values);
    }
  }
  out.value = mean_of(hinges);
  out.std_error = std_error_of(hinges);
  return out;
}

void PlannerTrainConfig::validate() const {
  if (!(beta2 >= 0.0) || !(beta3 >= 0.0)) {
    throw std::invalid_argument("planner: beta2 and beta3 must be >= 0");
  }
  if (!(lp > 0.0)) throw std::invalid_argument("planner: lp must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("planner: epsilon must be positive");
  if (!(score_weight >= 0.0)) throw std::invalid_argument("planner: score_weight must be >= 0");
  if (steps < 0 || pretrain_steps < 0) throw std::invalid_argument("planner: negative step count");
  if (n_rollouts < 1 || bc_batch < 1 || penalty_pairs < 1 || n_noise < 1) {
    throw std::invalid_argument("planner: batch sizes must be >= 1");
  }
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) {
    throw std::invalid_argument("planner: baseline_decay must lie in [0, 1)");
  }
  if (!(learning_rate > 0.0) || !(pretrain_learning_rate > 0.0)) {
    throw std::invalid_argument("planner: learning rates must be positive");
  }
  if (validation_every < 1 || validation_rollouts < 1) {
    throw std::invalid_argument("planner: validation settings must be >= 1");
  }
}

std::vector<PlannerStepLog> pretrain_planner(PlannerModel& model, const OfflineDataset& dataset,
                                             const PlannerTrainConfig& config, Rng& rng) {
  config.validate();
  if (dataset.empty()) throw std::domain_error("pretrain_planner: empty dataset");
  AdamConfig adam_config;
  adam_config.learning_rate = config.pretrain_learning_rate;
  adam_config.clip_norm = config.clip_norm;
  Adam adam(adam_config, model.params().size());
  std::vector<PlannerStepLog> log;
  log.reserve(static_cast<std::size_t>(config.pretrain_steps));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int step = 0; step < config.pretrain_steps; ++step) {
    const std::vector<LabeledSample> batch = sample_batch(dataset, config.bc_batch, rng);
    PlannerObjective bc = bc_loss(model, batch);
    if (!std::isfinite(bc.value) || !bc.grad.all_finite()) {
      throw TrainingDiverged("behavior-cloning NLL", step, model.params());
    }
    adam.set_learning_rate(cosine_learning_rate(config.pretrain_learning_rate, config.lr_floor,
                                                step, config.pretrain_steps));
    adam.step(model.params(), bc.grad);
    log.push_back({step, nan, bc.value, nan, bc.grad.norm(), nan});
  }
  return log;
}

PlannerLoss planner_loss(const PlannerModel& model, const PlanScorer& scorer,
                         const OfflineDataset& dataset, std::span<const PlanContext> contexts,
                         std::span<const double> pool, const PlannerTrainConfig& config,
                         ScoreBaseline& baseline, Rng& rng) {
  const double y_star = config.y_star(dataset.y_max);
  PlannerLoss out;
  out.grad = model.params().zeros_like();

  PlannerObjective score =
      score_gradient(model, scorer, y_star, contexts, config.n_rollouts, baseline, rng);
  out.l_estimate = score.value;
  if (!std::isfinite(score.value) || !score.grad.all_finite()) {
    throw std::domain_error("planner_loss: score term is non-finite");
  }
  // Scores are in quality units; dividing by y_m keeps the term scale-free.
  out.grad.axpy(-config.score_weight / model.condition_scale(), score.grad);

  const std::vector<LabeledSample> batch = sample_batch(dataset, config.bc_batch, rng);
  PlannerObjective bc = bc_loss(model, batch);
  out.bc_nll = bc.value;
  if (!std::isfinite(bc.value) || !bc.grad.all_finite()) {
    throw std::domain_error("planner_loss: behavior-cloning term is non-finite");
  }
  if (config.beta2 > 0.0) out.grad.axpy(config.beta2, bc.grad);

  PenaltyConfig penalty_config{config.lp, config.penalty_pairs, config.n_noise};
  PlannerObjective penalty = lipschitz_penalty(model, pool, y_star, penalty_config, contexts, rng);
  out.penalty = penalty.value;
  if (!std::isfinite(penalty.value) || !penalty.grad.all_finite()) {
    throw std::domain_error("planner_loss: Lipschitz term is non-finite");
  }
  if (config.beta3 > 0.0) out.grad.axpy(config.beta3, penalty.grad);
  return out;
}

double validation_score(const PlannerModel& model, const PlanScorer& scorer, double y,
                        std::span<const PlanContext> contexts,
                        const std::vector<std::vector<double>>& noise) {
  if (contexts.empty() || noise.empty()) {
    throw std::domain_error("validation_score: need contexts and noise");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    const PlanContext& ctx = contexts[i % contexts.size()];
    total += scorer(generate(model, y, {}, ctx.feature, noise[i]), ctx);
  }
  return total / static_cast<double>(noise.size());
}

PlannerTraining train_planner(PlannerModel& model, const PlanScorer& scorer,
                              const OfflineDataset& dataset, const PlannerTrainConfig& config,
                              Rng& rng) {
  config.validate();
  if (dataset.empty()) throw std::domain_error("train_planner: empty dataset");
  const std::vector<PlanContext> contexts = dataset_contexts(dataset);
  std::vector<double> pool;
  pool.reserve(dataset.size());
  for (const Trajectory& t : dataset.trajectories) pool.push_back(t.quality);
  const double y_star = config.y_star(dataset.y_max);

  Rng validation_rng(rng());
  std::vector<std::vector<double>> validation_noise;
  for (int i = 0; i < config.validation_rollouts; ++i) {
    validation_noise.push_back(draw_noise(model.horizon(), validation_rng));
  }

  AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  adam_config.clip_norm = config.clip_norm;
  Adam adam(adam_config, model.params().size());
  ScoreBaseline baseline;
  baseline.decay = config.baseline_decay;

  PlannerTraining out;
  ParamVector best = model.params();
  out.best_step = 0;
  out.best_validation_l = validation_score(model, scorer, y_star, contexts, validation_noise);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (int step = 0; step < config.steps; ++step) {
    PlannerLoss loss;
    try {
      loss = planner_loss(model, scorer, dataset, contexts, pool, config, baseline, rng);
    } catch (const std::domain_error& e) {
      out.diverged = true;
      out.divergence = std::string(e.what()) + " at step " + std::to_string(step);
      break;
    }
    if (!loss.grad.all_finite()) {
      out.diverged = true;
      out.divergence = "planner gradient became non-finite at step " + std::to_string(step);
      break;
    }
    adam.set_learning_rate(
        cosine_learning_rate(config.learning_rate, config.lr_floor, step, config.steps));
    adam.step(model.params(), loss.grad);
    PlannerStepLog row{step, loss.l_estimate, loss.bc_nll, loss.penalty, loss.grad.norm(), nan};
    if ((step + 1) % config.validation_every == 0 || step + 1 == config.steps) {
      row.validation_l = validation_score(model, scorer, y_star, contexts, validation_noise);
      if (!std::isfinite(row.validation_l)) {
        out.diverged = true;
        out.divergence = "validation score became non-finite at step " + std::to_string(step);
        out.log.push_back(row);
        break;
      }
      if (row.validation_l > out.best_validation_l) {
        out.best_validation_l = row.validation_l;
        out.best_step = step + 1;
        best = model.params();
      }
    }
    out.log.push_back(row);
  }
  if (out.diverged) model.params() = best;
  return out;
}

Checkpoint planner_checkpoint(const PlannerModel& model) {
  const CausalNetConfig& c = model.net().config();
  Checkpoint ck;
  ck.params = model.params();
  ck.meta["model"] = "planner";
  ck.meta["kind"] = to_string(c.kind);
  ck.meta["horizon"] = std::to_string(c.horizon);
  ck.meta["feature_dim"] = std::to_string(c.feature_dim);
  ck.meta["window"] = std::to_string(c.window);
  ck.meta["width"] = std::to_string(c.width);
  ck.meta["hidden"] = ints_text(c.hidden);
  ck.meta["activation"] = to_string(c.activation);
  ck.meta["use_cumulative"] = c.use_cumulative ? "1" : "0";
  ck.meta["use_time"] = c.use_time ? "1" : "0";
  ck.meta["sigma"] = real_text(model.sigma());
  ck.meta["condition_scale"] = real_text(model.condition_scale());
  return ck;
}

PlannerModel planner_from_checkpoint(const Checkpoint& checkpoint) {
  if (meta_value(checkpoint, "model") != "planner") {
    throw std::runtime_error("checkpoint does not hold a planner");
  }
  CausalNetConfig c;
  c.kind = causal_kind_from_string(meta_value(checkpoint, "kind"));
  c.horizon = meta_int(checkpoint, "horizon");
  c.feature_dim = meta_int(checkpoint, "feature_dim");
  c.window = meta_int(checkpoint, "window");
  c.width = meta_int(checkpoint, "width");
  c.hidden = meta_ints(checkpoint, "hidden");
  c.activation = activation_from_string(meta_value(checkpoint, "activation"));
  c.use_cumulative = meta_int(checkpoint, "use_cumulative") != 0;
  c.use_time = meta_int(checkpoint, "use_time") != 0;
  PlannerModel model(c, meta_real(checkpoint, "sigma"), meta_real(checkpoint, "condition_scale"));
  if (!model.params().same_layout(checkpoint.params)) {
    throw std::runtime_error("planner checkpoint layout does not match its architecture");
  }
  model.params() = checkpoint.params;
  return model;
}

}  // namespace bidplan
