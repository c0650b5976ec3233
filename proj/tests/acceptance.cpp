// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bidplan/assignment.hpp"
#include "bidplan/controller.hpp"
#include "bidplan/evaluator.hpp"
#include "bidplan/grad/causal.hpp"
#include "bidplan/harness/config.hpp"
#include "bidplan/harness/csv.hpp"
#include "bidplan/harness/pipeline.hpp"
#include "bidplan/metrics.hpp"
#include "bidplan/planner.hpp"
#include "bidplan/theory.hpp"

using namespace bidplan;

namespace {

// Pinned tolerances and limits.
constexpr long kQualityBoundPairs = 10000;
constexpr double kQualityBoundSeconds = 120.0;
constexpr double kGradTolerance = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr std::size_t kGradMaxParams = 500;
constexpr double kGradSeconds = 60.0;
constexpr long kScoreRollouts = 1000000;
constexpr int kScoreBatch = 10000;
constexpr int kHermitePoints = 64;
constexpr double kScoreTolerance = 0.02;
constexpr double kScoreSeconds = 120.0;
constexpr int kCouplingPairs = 20;
constexpr int kCouplingSamples = 64;
constexpr double kCouplingSlack = 3.0;  // pooled standard errors
constexpr double kCouplingSeconds = 300.0;
constexpr int kLipschitzPairs = 8000;
constexpr double kEvaluatorViolationMax = 0.05;
constexpr double kEvaluatorConstantFactor = 2.0;  // times sqrt(T) R_m
constexpr double kPlannerConstantFactor = 1.5;    // times L_p
constexpr double kLipschitzSeconds = 600.0;
constexpr int kMinImprovedSeeds = 4;
constexpr double kCostTolerancePct = 2.0;
constexpr double kEndToEndSeconds = 3600.0;
constexpr double kPathologySeconds = 1.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---- criterion 1 ----------------------------------------------------------

Outcome quality_bound_property(const ExperimentConfig& config) {
  const auto start = Clock::now();
  Rng rng = make_rng(config.seed, Stream::quality_bound);
  const QualityBoundReport r = check_quality_bound(config.env, kQualityBoundPairs, rng);
  Outcome o;
  o.seconds = seconds_since(start);
  o.pass = r.pairs >= kQualityBoundPairs && r.violations == 0 && o.seconds < kQualityBoundSeconds;
  o.detail = std::to_string(r.pairs) + " pairs (" + std::to_string(r.compared) +
             " with distinct costs), " + std::to_string(r.violations) + " violations, max ratio " +
             fmt("%.4f", r.max_ratio) + " vs bound " + fmt("%.4f", r.bound);
  return o;
}

// ---- criterion 2 ----------------------------------------------------------

std::vector<double> central_differences(std::vector<double>& x, const std::function<double()>& f) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + kGradStep;
    const double up = f();
    x[i] = keep - kGradStep;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * kGradStep);
  }
  return g;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double s = std::sqrt(std::max(na, nb));
  return s == 0.0 ? 0.0 : std::sqrt(d) / s;
}

struct GradCase {
  std::string name;
  std::size_t params = 0;
  double error = 0.0;
};

GradCase check_function(const std::string& name, DiffFunction& f, Rng& rng) {
  std::vector<double> x(static_cast<std::size_t>(f.input_dim()));
  for (double& v : x) v = standard_normal(rng);
  std::vector<double> up(static_cast<std::size_t>(f.output_dim()));
  for (double& v : up) v = standard_normal(rng);
  auto value = [&] {
    const std::vector<double> y = f.forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += up[i] * y[i];
    return s;
  };
  const Gradients g = f.backward(x, up);
  const double e_params = rel_error(g.params.values, central_differences(f.params().values, value));
  std::vector<double> num_input = central_differences(x, value);
  // Teacher-forced nets expose gradients for the cost entries only.
  if (f.kind() == "teacher-forced") {
    for (std::size_t i = static_cast<std::size_t>(f.output_dim()); i < num_input.size(); ++i) {
      num_input[i] = 0.0;
    }
  }
  return {name, f.params().size(), std::max(e_params, rel_error(g.input, num_input))};
}

Outcome gradient_oracle() {
  const auto start = Clock::now();
  Rng rng = make_rng(2, Stream::planner);
  std::vector<GradCase> cases;

  // Evaluator: step-pooled network and the full training loss including the hinge.
  const int horizon = 8;
  EvaluatorConfig ec;
  ec.hidden = {12, 12};
  EvaluatorModel evaluator(horizon, kFeatureDim, 50.0, 0.05, ec);
  evaluator.net.init(rng, 2.0);
  cases.push_back(check_function("evaluator net", evaluator.net, rng));
  {
    std::vector<Trajectory> trajs(6);
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      Trajectory& t = trajs[i];
      t.profile_id = static_cast<int>(i % 2);
      t.budget = 40.0;
      t.feature = {0.3, 0.6, 0.2 + 0.1 * static_cast<double>(i % 2), 0.5};
      for (int s = 0; s < horizon; ++s) {
        t.costs.push_back(std::abs(5.0 + 3.0 * standard_normal(rng)));
        t.rewards.push_back(uniform(rng, 0.0, 4.0));
        t.quality += t.rewards.back();
      }
    }
    EvaluatorBatch batch;
    for (const Trajectory& t : trajs) batch.labeled.push_back({&t, t.quality});
    for (std::size_t i = 0; i + 2 < trajs.size(); ++i) batch.pairs.emplace_back(trajs[i], trajs[i + 2]);
    const EvaluatorLoss loss = evaluator_loss(evaluator, batch, 4.0);
    const double e = rel_error(loss.grad.values,
                               central_differences(evaluator.net.params().values, [&] {
                                 return evaluator_loss(evaluator, batch, 4.0).total;
                               }));
    cases.push_back({"evaluator loss", evaluator.net.params().size(), e});
  }

  // Planner means: window and attention, teacher-forced and through generated rollouts.
  for (CausalKind kind : {CausalKind::window, CausalKind::attention}) {
    CausalNetConfig nc;
    nc.kind = kind;
    nc.horizon = horizon;
    nc.feature_dim = kFeatureDim;
    nc.window = 4;
    nc.width = 4;
    nc.hidden = kind == CausalKind::window ? std::vector<int>{12} : std::vector<int>{8};
    PlannerModel planner(nc, 0.2, 50.0);
    planner.net().init(rng, 1.5);
    TeacherForcedFunction tf(planner.net());
    cases.push_back(check_function(std::string("planner ") + to_string(kind), tf, rng));

    const std::vector<double> feature{0.3, 0.6, 0.2, 0.5};
    const std::vector<double> eta = draw_noise(horizon, rng);
    std::vector<double> w(static_cast<std::size_t>(horizon));
    for (double& v : w) v = standard_normal(rng);
    const std::vector<double> u = generate(planner, 40.0, {}, feature, eta);
    std::vector<double> lambda = w;
    ParamVector g = planner.params().zeros_like();
    backprop_rollout(planner, u, 40.0, feature, lambda, 0, g.values);
    const double e = rel_error(g.values, central_differences(planner.params().values, [&] {
                                 const std::vector<double> v = generate(planner, 40.0, {}, feature, eta);
                                 double s = 0.0;
                                 for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
                                 return s;
                               }));
    cases.push_back({std::string("planner rollout ") + to_string(kind), planner.params().size(), e});
  }

  // Controller: softplus-output dense network.
  ControllerConfig cc;
  cc.hidden = {12, 12};
  InverseDynamicsModel controller(horizon, kFeatureDim, 2.0, cc);
  controller.net.init(rng, 1.0);
  cases.push_back(check_function("controller net", controller.net, rng));

  Outcome o;
  o.seconds = seconds_since(start);
  o.pass = o.seconds < kGradSeconds;
  for (const GradCase& c : cases) {
    const bool ok = c.error <= kGradTolerance && c.params <= kGradMaxParams;
    o.pass = o.pass && ok;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += c.name + " " + std::to_string(c.params) + "p err " + fmt("%.2e", c.error);
  }
  return o;
}

// ---- criterion 3 ----------------------------------------------------------

// Nodes and weights for the integral of exp(-x^2) f(x), by Newton iteration on
// the orthonormal Hermite recurrence.
void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[static_cast<std::size_t>(i - 2)];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    x[static_cast<std::size_t>(n - 1 - i)] = -z;
    w[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
    w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
  }
}

Outcome score_gradient_check() {
  const auto start = Clock::now();
  // T = 1, one feature: mu = w_c * (y / y_m) + w_x * x + b, three parameters.
  CausalNetConfig nc;
  nc.horizon = 1;
  nc.feature_dim = 1;
  nc.window = 0;
  nc.hidden = {};
  nc.activation = Activation::identity;
  nc.use_cumulative = false;
  nc.use_time = false;
  const double ym = 10.0;
  PlannerModel model(nc, 0.5, ym);
  auto w = model.params().group("mean.w1");
  w[0] = 0.3;
  w[1] = -0.4;
  model.params().group("mean.b1")[0] = 0.1;
  const std::vector<PlanContext> contexts{{{0.5}, 1.0}};
  auto f = [](double u) { return std::sin(2.0 * u) + 0.5 * u; };
  const PlanScorer scorer = [&f](std::span<const double> u, const PlanContext&) { return f(u[0]); };

  std::vector<double> nodes, weights;
  gauss_hermite(kHermitePoints, nodes, weights);
  auto expected_score = [&] {
    const double mu = model.mean(1, {}, ym, contexts[0].feature);
    double s = 0.0;
    for (int i = 0; i < kHermitePoints; ++i) {
      s += weights[static_cast<std::size_t>(i)] *
           f(mu + model.sigma() * std::sqrt(2.0) * nodes[static_cast<std::size_t>(i)]);
    }
    return s / std::sqrt(std::numbers::pi);
  };
  const std::vector<double> exact = central_differences(model.params().values, expected_score);

  Rng rng = make_rng(3, Stream::planner);
  ScoreBaseline baseline;
  std::vector<double> mc(model.params().size(), 0.0);
  const long batches = kScoreRollouts / kScoreBatch;
  for (long b = 0; b < batches; ++b) {
    const PlannerObjective g = score_gradient(model, scorer, ym, contexts, kScoreBatch, baseline, rng);
    for (std::size_t i = 0; i < mc.size(); ++i) mc[i] += g.grad.values[i] / static_cast<double>(batches);
  }

  Outcome o;
  o.seconds = seconds_since(start);
  double worst = 0.0;
  for (std::size_t i = 0; i < mc.size(); ++i) {
    worst = std::max(worst, std::abs(mc[i] - exact[i]) / std::abs(exact[i]));
  }
  o.pass = worst <= kScoreTolerance && o.seconds < kScoreSeconds;
  o.detail = std::to_string(kScoreRollouts) + " rollouts; quadrature gradient (" +
             fmt("%.5f", exact[0]) + ", " + fmt("%.5f", exact[1]) + ", " + fmt("%.5f", exact[2]) +
             "), estimate (" + fmt("%.5f", mc[0]) + ", " + fmt("%.5f", mc[1]) + ", " +
             fmt("%.5f", mc[2]) + "), worst relative error " + fmt("%.4f", worst);
  return o;
}

// ---- criterion 4 ----------------------------------------------------------

Outcome coupling_bound(const ExperimentConfig& config, const OfflineDataset& dataset,
                       const PlannerModel& planner) {
  const auto start = Clock::now();
  const double y_star = config.planner.y_star(dataset.y_max);
  const std::vector<PlanContext> contexts = dataset_contexts(dataset);
  Rng rng = make_rng(config.seed, Stream::lipschitz, 4);
  const auto grid = condition_grid(0.0, y_star, kCouplingPairs, rng);
  int below = 0;
  double sync_sum = 0.0, indep_sum = 0.0, worst_margin = 1e300;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto [y1, y2] = grid[i];
    const PlanContext& ctx = contexts[i % contexts.size()];
    Rng replay = rng;
    const CoupledEstimate sync = sync_coupled_w1(planner, y1, y2, ctx.feature, kCouplingSamples, rng);
    std::vector<std::vector<double>> noise;
    for (int k = 0; k < kCouplingSamples; ++k) noise.push_back(draw_noise(planner.horizon(), replay));
    const auto a = rollouts(planner, y1, ctx.feature, noise);
    const auto b = rollouts(planner, y2, ctx.feature, noise);
    const double exact = empirical_w1(a, b);
    // Spread of the per-sample costs under the optimal matching.
    std::vector<double> cost(a.size() * b.size());
    for (std::size_t r = 0; r < a.size(); ++r) {
      for (std::size_t c = 0; c < b.size(); ++c) {
        double s = 0.0;
        for (std::size_t t = 0; t < a[r].size(); ++t) s += std::abs(a[r][t] - b[c][t]);
        cost[r * b.size() + c] = s;
      }
    }
    const Assignment match =
        solve_assignment(cost, static_cast<int>(a.size()), static_cast<int>(b.size()));
    double ss = 0.0;
    for (std::size_t r = 0; r < a.size(); ++r) {
      const double d = cost[r * b.size() + static_cast<std::size_t>(match.row_to_col[r])] - exact;
      ss += d * d;
    }
    const double n = static_cast<double>(a.size());
    const double se_exact = std::sqrt(ss / (n - 1.0) / n);
    const double pooled = std::sqrt(sync.std_error * sync.std_error + se_exact * se_exact);
    const double margin = sync.mean - exact + kCouplingSlack * pooled;
    worst_margin = std::min(worst_margin, margin);
    if (margin >= 0.0) ++below;

    const CoupledEstimate indep =
        independent_coupled_w1(planner, y1, y2, ctx.feature, kCouplingSamples, rng);
    sync_sum += sync.mean;
    indep_sum += indep.mean;
  }
  Outcome o;
  o.seconds = seconds_since(start);
  const double n = static_cast<double>(grid.size());
  o.pass = below == static_cast<int>(grid.size()) && sync_sum <= indep_sum &&
           o.seconds < kCouplingSeconds;
  o.detail = std::to_string(below) + "/" + std::to_string(grid.size()) +
             " pairs with sync >= exact W1 - 3 SE (smallest margin " + fmt("%.4f", worst_margin) +
             "); mean sync " + fmt("%.4f", sync_sum / n) + " vs independent " +
             fmt("%.4f", indep_sum / n);
  return o;
}

// ---- criterion 5 ----------------------------------------------------------

Outcome lipschitz_satisfaction(const ExperimentConfig& config, const OfflineDataset& dataset,
                               const EvaluatorModel& evaluator, const AblationRow& full,
                               double training_seconds) {
  const auto start = Clock::now();
  Rng rng = make_rng(config.seed, Stream::lipschitz, 5);
  const LipschitzEstimate est = estimate_lipschitz(evaluator, dataset, kLipschitzPairs, rng);
  const double budget = evaluator.lipschitz_budget();
  Outcome o;
  o.seconds = seconds_since(start);
  const bool evaluator_ok =
      est.violation_rate <= kEvaluatorViolationMax && est.l_hat <= kEvaluatorConstantFactor * budget;
  const bool planner_ok = full.planner_lipschitz <= kPlannerConstantFactor * full.lp;
  o.pass = evaluator_ok && planner_ok && o.seconds + training_seconds < kLipschitzSeconds;
  o.detail = "evaluator violation rate " + fmt("%.4f", est.violation_rate) + " over " +
             std::to_string(est.pairs.size()) + " pairs, L_hat " + fmt("%.3f", est.l_hat) +
             " vs 2 sqrt(T) R_m = " + fmt("%.3f", kEvaluatorConstantFactor * budget) +
             "; planner constant " + fmt("%.3f", full.planner_lipschitz) + " vs 1.5 L_p = " +
             fmt("%.3f", kPlannerConstantFactor * full.lp) + " (training " +
             fmt("%.0f", training_seconds) + "s)";
  return o;
}

// ---- criteria 6 and 7 -----------------------------------------------------

const MetricsSummary& overall(const AblationRow& row) { return find_group(row.groups, "all").summary; }

const AblationRow& row_for(const std::vector<AblationRow>& rows, std::uint64_t seed,
                           const std::string& variant) {
  for (const AblationRow& r : rows) {
    if (r.seed == seed && r.variant == variant) return r;
  }
  throw std::runtime_error("missing ablation row " + variant);
}

Outcome end_to_end(const ExperimentConfig& config, const std::vector<AblationRow>& rows,
                   double seconds) {
  Outcome o;
  o.seconds = seconds;
  std::vector<double> deltas;
  int improved = 0;
  bool cost_ok = true;
  std::string per_seed;
  std::string per_seed_cost;
  double worst_cost = 0.0;
  double mean_cost = 0.0;
  int cost_within = 0;
  for (std::uint64_t seed : config.seeds) {
    const MetricsSummary& full = overall(row_for(rows, seed, "full"));
    const MetricsSummary& bc = overall(row_for(rows, seed, "bc_only"));
    const double d = percent_change(full.gmv, bc.gmv);
    const double c = percent_change(full.cost, bc.cost);
    deltas.push_back(d);
    improved += d > 0.0 ? 1 : 0;
    // The tolerance applies to every seed, each seed being one full comparison.
    cost_ok = cost_ok && std::abs(c) <= kCostTolerancePct;
    cost_within += std::abs(c) <= kCostTolerancePct ? 1 : 0;
    worst_cost = std::max(worst_cost, std::abs(c));
    mean_cost += c / static_cast<double>(config.seeds.size());
    per_seed += (per_seed.empty() ? "" : ", ") + fmt("%+.2f%%", d);
    per_seed_cost += (per_seed_cost.empty() ? "" : ", ") + fmt("%+.2f%%", c);
  }
  double mean = 0.0;
  for (double d : deltas) mean += d / static_cast<double>(deltas.size());
  double var = 0.0;
  for (double d : deltas) var += (d - mean) * (d - mean);
  const double n = static_cast<double>(deltas.size());
  const double se = n > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
  const int needed = std::min<int>(kMinImprovedSeeds, static_cast<int>(deltas.size()));
  o.pass = mean > 0.0 && improved >= needed && cost_ok && seconds < kEndToEndSeconds;
  o.detail = "GMV delta vs BC-only per seed [" + per_seed + "], mean " + fmt("%+.2f%%", mean) +
             " (t = " + fmt("%.2f", se > 0.0 ? mean / se : 0.0) + "), improved " +
             std::to_string(improved) + "/" + std::to_string(deltas.size()) +
             "; cost delta per seed [" + per_seed_cost + "], mean " + fmt("%+.2f%%", mean_cost) +
             ", within 2%: " + std::to_string(cost_within) + "/" + std::to_string(deltas.size()) +
             " (worst " + fmt("%.2f%%", worst_cost) + ")";
  return o;
}

Outcome ablation_direction(const ExperimentConfig& config, const std::vector<AblationRow>& rows,
                           double seconds) {
  auto mean_of = [&](const std::string& variant, double MetricsSummary::*field) {
    double s = 0.0;
    for (std::uint64_t seed : config.seeds) s += overall(row_for(rows, seed, variant)).*field;
    return s / static_cast<double>(config.seeds.size());
  };
  const double gmv_full = mean_of("full", &MetricsSummary::gmv);
  const double bad_full = mean_of("full", &MetricsSummary::bad_case_rate);
  Outcome o;
  o.seconds = seconds;
  o.pass = seconds < 3.0 * kEndToEndSeconds;
  o.detail = "full GMV " + fmt("%.2f", gmv_full) + " bad " + fmt("%.4f", bad_full);
  for (const char* variant : {"no_kl", "no_lip"}) {
    const double gmv = mean_of(variant, &MetricsSummary::gmv);
    const double bad = mean_of(variant, &MetricsSummary::bad_case_rate);
    const bool ok = gmv <= gmv_full && bad >= bad_full;
    o.pass = o.pass && ok;
    bool identical = true;
    for (std::uint64_t seed : config.seeds) {
      const MetricsSummary& a = overall(row_for(rows, seed, variant));
      const MetricsSummary& b = overall(row_for(rows, seed, "full"));
      identical = identical && a.gmv == b.gmv && a.bad_case_rate == b.bad_case_rate;
    }
    o.detail += std::string("; ") + variant + " GMV " + fmt("%.2f", gmv) + " bad " +
                fmt("%.4f", bad) + (ok ? " (ok)" : " (wrong direction)") +
                (identical ? " [identical to full]" : "");
  }
  return o;
}

// ---- criterion 8 ----------------------------------------------------------

Outcome pathology_examples() {
  const auto start = Clock::now();
  const int horizon = 48;
  const double budget = 1000.0;
  const int quarter = horizon / 4;
  std::vector<double> spike(horizon, 0.89 * budget / (horizon - 1));
  spike[20] = 0.11 * budget;
  const std::vector<double> under(horizon, 0.89 * budget / horizon);
  std::vector<double> front(horizon, 0.59 * budget / (horizon - quarter));
  for (int t = 0; t < quarter; ++t) front[static_cast<std::size_t>(t)] = 0.41 * budget / quarter;

  const PathologyFlags a = pathology_flags(spike, budget);
  const PathologyFlags b = pathology_flags(under, budget);
  const PathologyFlags c = pathology_flags(front, budget);
  Outcome o;
  o.seconds = seconds_since(start);
  const bool ok_a = a.excessive_step_spend && a.count() == 1;
  const bool ok_b = b.underutilization && b.count() == 1;
  const bool ok_c = c.forward_pacing && c.count() == 1;
  o.pass = ok_a && ok_b && ok_c && o.seconds < kPathologySeconds;
  o.detail = std::string("0.11 B step -> ") + (ok_a ? "excessive only" : "wrong flags") +
             "; 0.89 B total -> " + (ok_b ? "underutilization only" : "wrong flags") +
             "; 0.41 B first quarter -> " + (ok_c ? "forward pacing only" : "wrong flags");
  return o;
}

void print(int id, const char* name, const Outcome& o) {
  std::printf("criterion %d  %-26s %s  %s  [%.1fs]\n", id, name, o.pass ? "PASS" : "FAIL",
              o.detail.c_str(), o.seconds);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bidplan acceptance run"};
  std::string out = "acceptance_run";
  std::string config_path;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  bool quiet = false;
  app.add_option("--out", out, "Directory for run artifacts");
  app.add_option("--config", config_path, "Configuration file");
  app.add_option("--seeds", seeds, "Seeds for the end-to-end criteria");
  app.add_flag("-q,--quiet", quiet, "No progress on stderr");
  CLI11_PARSE(app, argc, argv);

  ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
  config.seeds = seeds;
  config.seed = seeds.front();
  config.out_dir = out;
  std::filesystem::create_directories(config.out_dir);
  const auto t0 = Clock::now();
  const ProgressFn progress = [&](const std::string& msg) {
    if (!quiet) std::fprintf(stderr, "[%7.1fs] %s\n", seconds_since(t0), msg.c_str());
  };
  std::printf("config digest %s, seeds", config.digest().c_str());
  for (std::uint64_t s : seeds) std::printf(" %llu", static_cast<unsigned long long>(s));
  std::printf("\n");

  std::vector<Outcome> outcomes(9);
  outcomes[1] = quality_bound_property(config);
  print(1, "quality bound", outcomes[1]);
  outcomes[2] = gradient_oracle();
  print(2, "gradient oracle", outcomes[2]);
  outcomes[3] = score_gradient_check();
  print(3, "score gradient", outcomes[3]);
  outcomes[8] = pathology_examples();
  print(8, "pathology detectors", outcomes[8]);

  // One ablation run feeds criteria 4-7; the first seed's shared stages are kept.
  std::optional<OfflineDataset> first_dataset;
  std::optional<EvaluatorModel> first_evaluator;
  std::optional<PlannerModel> first_planner;
  ExperimentConfig first_config = config;
  double first_training_seconds = 0.0;
  const auto ablation_start = Clock::now();
  const SharedObserver keep = [&](const ExperimentConfig& c, const OfflineDataset& d,
                                  const SharedStages& s) {
    if (first_dataset) return;
    first_training_seconds = seconds_since(ablation_start);
    first_config = c;
    first_dataset = d;
    first_evaluator = s.evaluator;
    first_planner = s.planner_bc;
  };
  const std::vector<AblationRow> rows = run_ablation(config, progress, keep);
  const double ablation_seconds = seconds_since(ablation_start);

  {
    CsvWriter csv(config.out_dir / "acceptance_ablation.csv", config.digest(), config.seed,
                  {"seed", "variant", "gmv", "cost", "bad_case_rate", "online_rate",
                   "planner_lipschitz", "lp", "validation_l", "diverged"});
    for (const AblationRow& r : rows) {
      const MetricsSummary& m = overall(r);
      csv.row({std::to_string(r.seed), r.variant, csv_cell(m.gmv), csv_cell(m.cost),
               csv_cell(m.bad_case_rate), csv_cell(m.online_rate), csv_cell(r.planner_lipschitz),
               csv_cell(r.lp), csv_cell(r.validation_l), csv_cell(r.diverged)});
    }
  }

  outcomes[4] = coupling_bound(first_config, *first_dataset, *first_planner);
  print(4, "coupling upper bound", outcomes[4]);
  const AblationRow& full = row_for(rows, first_config.seed, "full");
  outcomes[5] = lipschitz_satisfaction(first_config, *first_dataset, *first_evaluator, full,
                                       first_training_seconds);
  print(5, "Lipschitz satisfaction", outcomes[5]);
  outcomes[6] = end_to_end(config, rows, ablation_seconds);
  print(6, "end-to-end improvement", outcomes[6]);
  outcomes[7] = ablation_direction(config, rows, ablation_seconds);
  print(7, "ablation direction", outcomes[7]);
  std::printf(
      "criterion 9  %-26s N/A   production-scale tables and the ROI-constrained variant are out of "
      "scope; criteria 6-7 stand in for them\n",
      "real-world numbers");

  bool all = true;
  for (int i = 1; i <= 8; ++i) all = all && outcomes[static_cast<std::size_t>(i)].pass;
  {
    CsvWriter csv(config.out_dir / "acceptance_summary.csv", config.digest(), config.seed,
                  {"criterion", "status", "seconds", "detail"});
    for (int i = 1; i <= 8; ++i) {
      const Outcome& o = outcomes[static_cast<std::size_t>(i)];
      csv.row({std::to_string(i), o.pass ? "PASS" : "FAIL", csv_cell(o.seconds), csv_cell(o.detail)});
    }
    csv.row({"9", "N/A", csv_cell(0.0), csv_cell(std::string("not reproducible at desk scale"))});
  }
  std::printf("overall: %s [%.1fs]\n", all ? "PASS" : "FAIL", seconds_since(t0));
  return all ? 0 : 1;
}
