#include "bidplan/harness/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "bidplan/harness/csv.hpp"
#include "bidplan/training.hpp"

namespace bidplan {

namespace {

void say(const ProgressFn& progress, const std::string& text) {
  if (progress) progress(text);
}

std::string fixed(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

void require_file(const std::filesystem::path& path, const char* hint) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("missing " + path.string() + " (" + hint + ")");
  }
}

CsvWriter csv(const ExperimentConfig& config, const std::string& name,
              const std::vector<std::string>& columns) {
  return CsvWriter(config.out_dir / name, config.digest(), config.seed, columns);
}

void save_with_meta(Checkpoint ck, const ExperimentConfig& config, const std::filesystem::path& path,
                    const std::map<std::string, std::string>& extra = {}) {
  ck.meta["config_digest"] = config.digest();
  ck.meta["seed"] = std::to_string(config.seed);
  for (const auto& [k, v] : extra) ck.meta[k] = v;
  save_checkpoint(ck, path);
}

OfflineDataset load_run_dataset(const ExperimentConfig& config) {
  const RunPaths paths{config.out_dir};
  require_file(paths.dataset(), "run gen-data first");
  return load_dataset(paths.dataset());
}

void write_planner_log(const ExperimentConfig& config, const std::string& name,
                       const std::vector<PlannerStepLog>& log) {
  CsvWriter out = csv(config, name,
                      {"step", "l_estimate", "bc_nll", "lipschitz_penalty", "grad_norm",
                       "validation_l"});
  for (const PlannerStepLog& r : log) {
    out.row({csv_cell(r.step), csv_cell(r.l_estimate), csv_cell(r.bc_nll),
             csv_cell(r.lipschitz_penalty), csv_cell(r.grad_norm), csv_cell(r.validation_l)});
  }
}

const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols{
      "episodes", "gmv",       "buy_cnt",       "cost",         "roi",
      "online_rate", "cost_rate", "bad_case_rate"};
  return cols;
}

std::vector<std::string> summary_cells(const MetricsSummary& s) {
  return {csv_cell(s.episodes),    csv_cell(s.gmv),       csv_cell(s.buy_cnt),
          csv_cell(s.cost),        csv_cell(s.roi),       csv_cell(s.online_rate),
          csv_cell(s.cost_rate),   csv_cell(s.bad_case_rate)};
}

std::string level_text(double level) { return level == 0.0 ? "all" : csv_cell(level); }

}  // namespace

ExperimentProfiles experiment_profiles(const ExperimentConfig& config) {
  Rng rng = make_rng(config.seed, Stream::profiles);
  ExperimentProfiles out;
  out.train = make_profiles(config.env, config.train_profiles, 0, config.budget_levels, rng);
  out.eval = make_profiles(config.env, config.eval_profiles, config.train_profiles,
                           config.budget_levels, rng);
  return out;
}

OfflineDataset build_dataset(const ExperimentConfig& config, const ExperimentProfiles& profiles) {
  OfflineDataset ds = generate_dataset(config.env, profiles.train, config.behavior.specs(),
                                       config.episodes_per_pair, config.seed);
  ds.meta.config_digest = config.digest();
  return ds;
}

SharedStages train_shared(const ExperimentConfig& config, const OfflineDataset& dataset,
                          const ProgressFn& progress) {
  const int horizon = config.env.horizon;
  DatasetLipschitz dl = dataset_lipschitz(dataset, config.lipschitz);
  const double lp = config.lp_auto ? config.lp_factor * dl.estimate : config.planner.lp;
  say(progress, "dataset Lipschitz " + fixed(dl.estimate) + " over " +
                    std::to_string(dl.bins_used) + " bins; planner L_p " + fixed(lp));

  EvaluatorModel evaluator(horizon, kFeatureDim, dataset.y_max, config.env.roi_cap,
                           config.evaluator);
  Rng erng = make_rng(config.seed, Stream::evaluator);
  evaluator.net.init(erng);
  EvaluatorTraining et = train_evaluator(evaluator, dataset, config.evaluator, erng);
  say(progress, "evaluator: rmse " + fixed(et.report.delta_d, 2) + ", L_hat " +
                    fixed(et.report.l_hat, 3) + ", violation rate " +
                    fixed(et.report.pair_violation_rate, 4));

  InverseDynamicsModel controller(horizon, kFeatureDim, 1.0, config.controller);
  Rng crng = make_rng(config.seed, Stream::controller);
  ControllerTraining ct = train_inverse_dynamics(controller, dataset, config.controller, crng);
  say(progress, "controller: holdout mse " + fixed(ct.report.holdout_mse, 5) +
                    " (action variance " + fixed(ct.report.action_variance, 5) + ")");

  PlannerModel planner(config.planner_net, config.sigma, dataset.y_max);
  Rng prng = make_rng(config.seed, Stream::planner, 0);
  planner.net().init(prng, 0.1);
  std::vector<PlannerStepLog> pre = pretrain_planner(planner, dataset, config.planner, prng);
  say(progress, "planner warm start: bc nll " + fixed(pre.empty() ? 0.0 : pre.back().bc_nll, 3));

  return SharedStages{std::move(dl),         lp,
                      std::move(evaluator),  std::move(et),
                      std::move(controller), std::move(ct),
                      std::move(planner),    std::move(pre)};
}

FineTuned fine_tune(const ExperimentConfig& config, const SharedStages& shared,
                    const OfflineDataset& dataset, PlannerTrainConfig planner) {
  if (config.lp_auto) planner.lp = shared.lp;
  FineTuned out{shared.planner_bc, {}};
  Rng rng = make_rng(config.seed, Stream::planner, 1);
  out.training = train_planner(out.planner, evaluator_scorer(shared.evaluator), dataset, planner, rng);
  return out;
}

std::vector<EvalGroup> evaluate_method(const ExperimentConfig& config,
                                       const ExperimentProfiles& profiles,
                                       const PlannerModel& planner,
                                       const InverseDynamicsModel& controller, double y_star) {
  std::vector<double> levels{0.0};
  for (double b : config.budget_levels) {
    if (std::find(levels.begin(), levels.end(), b) == levels.end()) levels.push_back(b);
  }
  std::map<std::pair<std::string, double>, std::vector<EpisodeMetrics>> buckets;
  auto run_split = [&](const std::vector<AdvertiserProfile>& split, const std::string& name) {
    for (const AdvertiserProfile& profile : split) {
      const Policy policy = planning_policy(planner, controller, profile, y_star);
      for (int e = 0; e < config.eval_episodes; ++e) {
        Rng rng = make_rng(config.seed, Stream::evaluation, static_cast<std::uint64_t>(profile.id),
                           static_cast<std::uint64_t>(e));
        const ImpressionStream stream = sample_stream(config.env, profile, rng);
        const EpisodeMetrics m =
            episode_metrics(run_episode(config.env, profile, policy, stream), profile.budget);
        for (const std::string& s : {name, std::string("all")}) {
          buckets[{s, 0.0}].push_back(m);
          buckets[{s, profile.budget}].push_back(m);
        }
      }
    }
  };
  run_split(profiles.train, "seen");
  run_split(profiles.eval, "unseen");

  std::vector<EvalGroup> out;
  for (const char* split : {"seen", "unseen", "all"}) {
    for (double level : levels) {
      auto it = buckets.find({split, level});
      if (it == buckets.end()) continue;
      out.push_back({split, level, summarize(it->second)});
    }
  }
  return out;
}

const EvalGroup& find_group(const std::vector<EvalGroup>& groups, const std::string& split,
                            double budget_level) {
  for (const EvalGroup& g : groups) {
    if (g.split == split && g.budget_level == budget_level) return g;
  }
  throw std::out_of_range("no evaluation group " + split + "/" + level_text(budget_level));
}

double percent_change(double value, double baseline) {
  if (baseline == 0.0) return value == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (value - baseline) / std::abs(baseline);
}

std::filesystem::path cmd_gen_data(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);
  const OfflineDataset ds = build_dataset(config, experiment_profiles(config));
  const RunPaths paths{config.out_dir};
  save_dataset(ds, paths.dataset());

  CsvWriter hist = csv(config, "condition_histogram.csv", {"bin", "low", "high", "count"});
  const Histogram& h = ds.condition_histogram;
  const double width = h.counts.empty() ? 0.0 : (h.high - h.low) / static_cast<double>(h.counts.size());
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    hist.row({csv_cell(static_cast<long>(i)), csv_cell(h.low + width * static_cast<double>(i)),
              csv_cell(h.low + width * static_cast<double>(i + 1)), csv_cell(static_cast<long>(h.counts[i]))});
  }
  say(progress, "wrote " + std::to_string(ds.size()) + " trajectories to " +
                    paths.dataset().string() + " (y_m " + fixed(ds.y_max, 2) + ")");
  return paths.dataset();
}

void cmd_train(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  const RunPaths paths{config.out_dir};
  const OfflineDataset dataset = load_run_dataset(config);

  SharedStages shared = train_shared(config, dataset, progress);

  {
    CsvWriter out = csv(config, "dataset_lipschitz.csv",
                        {"bin_a", "bin_b", "w1", "condition_gap", "ratio"});
    for (const BinPairRatio& r : shared.data_lipschitz.pairs) {
      out.row({csv_cell(r.bin_a), csv_cell(r.bin_b), csv_cell(r.w1), csv_cell(r.condition_gap),
               csv_cell(r.ratio)});
    }
  }
  save_with_meta(evaluator_checkpoint(shared.evaluator, config.evaluator), config, paths.evaluator());
  {
    CsvWriter out = csv(config, "evaluator_log.csv", {"step", "loss", "mse", "penalty", "grad_norm"});
    for (const EvaluatorStepLog& r : shared.evaluator_training.log) {
      out.row({csv_cell(r.step), csv_cell(r.loss), csv_cell(r.mse), csv_cell(r.penalty),
               csv_cell(r.grad_norm)});
    }
  }
  save_with_meta(controller_checkpoint(shared.controller, config.controller), config,
                 paths.controller());
  {
    CsvWriter out = csv(config, "controller_log.csv", {"step", "mse"});
    for (std::size_t i = 0; i < shared.controller_training.loss_log.size(); ++i) {
      out.row({csv_cell(static_cast<long>(i)), csv_cell(shared.controller_training.loss_log[i])});
    }
  }
  const double y_star = config.planner.y_star(dataset.y_max);
  const std::map<std::string, std::string> planner_meta{{"lp", real_text(shared.lp)},
                                                        {"y_star", real_text(y_star)}};
  save_with_meta(planner_checkpoint(shared.planner_bc), config, paths.planner_bc(), planner_meta);
  write_planner_log(config, "planner_pretrain_log.csv", shared.pretrain_log);

  FineTuned tuned = fine_tune(config, shared, dataset, config.planner);
  write_planner_log(config, "planner_log.csv", tuned.training.log);
  if (tuned.training.diverged) {
    throw std::runtime_error("planner fine-tuning diverged: " + tuned.training.divergence +
                             "; earlier checkpoints kept");
  }
  save_with_meta(planner_checkpoint(tuned.planner), config, paths.planner(), planner_meta);

  const EvaluatorReport& er = shared.evaluator_training.report;
  const ControllerReport& cr = shared.controller_training.report;
  CsvWriter summary = csv(config, "train_summary.csv",
                          {"y_m", "y_star", "dataset_lipschitz", "lp", "evaluator_train_mse",
                           "evaluator_delta_d", "evaluator_l_hat", "evaluator_k_hat",
                           "evaluator_violation_rate", "controller_train_mse",
                           "controller_holdout_mse", "controller_action_variance",
                           "planner_best_step", "planner_best_validation_l"});
  summary.row({csv_cell(dataset.y_max), csv_cell(y_star), csv_cell(shared.data_lipschitz.estimate),
               csv_cell(shared.lp), csv_cell(er.train_mse), csv_cell(er.delta_d),
               csv_cell(er.l_hat), csv_cell(er.k_hat), csv_cell(er.pair_violation_rate),
               csv_cell(cr.train_mse), csv_cell(cr.holdout_mse), csv_cell(cr.action_variance),
               csv_cell(tuned.training.best_step), csv_cell(tuned.training.best_validation_l)});
  say(progress, "checkpoints written to " + config.out_dir.string());
}

void cmd_eval(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  const RunPaths paths{config.out_dir};
  for (const auto& p : {paths.controller(), paths.planner_bc(), paths.planner()}) {
    require_file(p, "run train first");
  }
  const OfflineDataset dataset = load_run_dataset(config);
  const double y_star = config.planner.y_star(dataset.y_max);
  const InverseDynamicsModel controller = controller_from_checkpoint(load_checkpoint(paths.controller()));
  const PlannerModel bc = planner_from_checkpoint(load_checkpoint(paths.planner_bc()));
  const PlannerModel tuned = planner_from_checkpoint(load_checkpoint(paths.planner()));
  const ExperimentProfiles profiles = experiment_profiles(config);

  const std::vector<EvalGroup> base = evaluate_method(config, profiles, bc, controller, y_star);
  const std::vector<EvalGroup> ours = evaluate_method(config, profiles, tuned, controller, y_star);

  std::vector<std::string> cols{"method", "split", "budget_level"};
  for (const std::string& c : summary_columns()) cols.push_back(c);
  for (const char* c : {"delta_gmv_pct", "delta_buy_cnt_pct", "delta_roi_pct", "delta_cost_pct"}) {
    cols.emplace_back(c);
  }
  CsvWriter out = csv(config, "eval_metrics.csv", cols);
  auto emit = [&](const std::string& method, const std::vector<EvalGroup>& groups) {
    for (const EvalGroup& g : groups) {
      const MetricsSummary& b = find_group(base, g.split, g.budget_level).summary;
      std::vector<std::string> row{method, g.split, level_text(g.budget_level)};
      for (const std::string& c : summary_cells(g.summary)) row.push_back(c);
      row.push_back(csv_cell(percent_change(g.summary.gmv, b.gmv)));
      row.push_back(csv_cell(percent_change(g.summary.buy_cnt, b.buy_cnt)));
      row.push_back(csv_cell(percent_change(g.summary.roi, b.roi)));
      row.push_back(csv_cell(percent_change(g.summary.cost, b.cost)));
      out.row(row);
    }
  };
  emit("bc", base);
  emit("planner", ours);

  for (const char* split : {"seen", "unseen", "all"}) {
    const MetricsSummary& b = find_group(base, split).summary;
    const MetricsSummary& o = find_group(ours, split).summary;
    say(progress, std::string(split) + ": GMV " + fixed(o.gmv, 2) + " vs " + fixed(b.gmv, 2) + " (" +
                      fixed(percent_change(o.gmv, b.gmv), 2) + "%), cost " +
                      fixed(percent_change(o.cost, b.cost), 2) + "%, bad case rate " +
                      fixed(o.bad_case_rate, 3) + " vs " + fixed(b.bad_case_rate, 3));
  }
}

PlannerLipschitz planner_lipschitz_on_grid(const ExperimentConfig& config,
                                           const PlannerModel& planner,
                                           const OfflineDataset& dataset, double y_star) {
  const std::vector<PlanContext> contexts = dataset_contexts(dataset);
  Rng rng = make_rng(config.seed, Stream::lipschitz, 1);
  const auto grid = condition_grid(0.0, y_star, config.planner_grid, rng);
  PlannerLipschitz out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const PlanContext& ctx = contexts[i % contexts.size()];
    const PlannerLipschitz one =
        planner_lipschitz(planner, {grid[i]}, ctx.feature, config.planner_noise, rng);
    for (double r : one.ratios) out.ratios.push_back(r);
    out.estimate = std::max(out.estimate, one.estimate);
  }
  return out;
}

void cmd_lipschitz_check(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  const RunPaths paths{config.out_dir};
  require_file(paths.evaluator(), "run train first");
  require_file(paths.planner(), "run train first");
  const OfflineDataset dataset = load_run_dataset(config);
  const EvaluatorModel evaluator = evaluator_from_checkpoint(load_checkpoint(paths.evaluator()));
  const Checkpoint planner_ck = load_checkpoint(paths.planner());
  const PlannerModel planner = planner_from_checkpoint(planner_ck);
  const double lp = meta_real(planner_ck, "lp");
  const double y_star = meta_real(planner_ck, "y_star");

  Rng rng = make_rng(config.seed, Stream::lipschitz, 0);
  const LipschitzEstimate est =
      estimate_lipschitz(evaluator, dataset, config.evaluator.lipschitz_pairs, rng);
  {
    CsvWriter out = csv(config, "evaluator_lipschitz_pairs.csv",
                        {"pair_id", "distance", "delta", "ratio", "violated"});
    for (std::size_t i = 0; i < est.pairs.size(); ++i) {
      const PairRatio& p = est.pairs[i];
      out.row({csv_cell(static_cast<long>(i)), csv_cell(p.distance), csv_cell(p.delta),
               csv_cell(p.ratio), csv_cell(p.violated)});
    }
  }

  const std::vector<PlanContext> contexts = dataset_contexts(dataset);
  Rng grng = make_rng(config.seed, Stream::lipschitz, 1);
  const auto grid = condition_grid(0.0, y_star, config.planner_grid, grng);
  double planner_max = 0.0;
  long planner_violations = 0;
  {
    CsvWriter out = csv(config, "planner_lipschitz_pairs.csv",
                        {"pair_id", "distance", "delta", "ratio", "violated"});
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const PlanContext& ctx = contexts[i % contexts.size()];
      const auto [y1, y2] = grid[i];
      const double gap = std::abs(planner.normalize_condition(y1) - planner.normalize_condition(y2));
      if (gap == 0.0) continue;
      const double w1 = sync_coupled_w1(planner, y1, y2, ctx.feature, config.planner_noise, grng).mean;
      const double ratio = w1 / gap;
      const bool violated = ratio > lp;
      planner_max = std::max(planner_max, ratio);
      planner_violations += violated ? 1 : 0;
      out.row({csv_cell(static_cast<long>(i)), csv_cell(gap), csv_cell(w1), csv_cell(ratio),
               csv_cell(violated)});
    }
  }

  CsvWriter summary = csv(config, "lipschitz_summary.csv",
                          {"evaluator_l_hat", "evaluator_k_hat", "evaluator_bound",
                           "evaluator_violation_rate", "planner_estimate", "lp",
                           "planner_violation_rate"});
  const double planner_rate =
      grid.empty() ? 0.0 : static_cast<double>(planner_violations) / static_cast<double>(grid.size());
  summary.row({csv_cell(est.l_hat), csv_cell(est.k_hat), csv_cell(evaluator.lipschitz_budget()),
               csv_cell(est.violation_rate), csv_cell(planner_max), csv_cell(lp),
               csv_cell(planner_rate)});
  say(progress, "evaluator L_hat " + fixed(est.l_hat, 3) + " (bound " +
                    fixed(evaluator.lipschitz_budget(), 3) + "), violation rate " +
                    fixed(est.violation_rate, 4) + "; planner " + fixed(planner_max, 3) +
                    " vs L_p " + fixed(lp, 3));
}

std::vector<AblationVariant> ablation_variants(const PlannerTrainConfig& base) {
  std::vector<AblationVariant> out{{"full", base}, {"no_kl", base}, {"no_lip", base}, {"bc_only", base}};
  out[1].planner.beta2 = 0.0;
  out[2].planner.beta3 = 0.0;
  out[3].planner.score_weight = 0.0;
  out[3].planner.beta3 = 0.0;
  return out;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& config, const ProgressFn& progress,
                                      const SharedObserver& observe) {
  config.validate();
  std::vector<AblationRow> rows;
  for (std::uint64_t seed : config.seeds) {
    ExperimentConfig c = config;
    c.seed = seed;
    const ExperimentProfiles profiles = experiment_profiles(c);
    const OfflineDataset dataset = build_dataset(c, profiles);
    say(progress, "seed " + std::to_string(seed) + ": " + std::to_string(dataset.size()) +
                      " trajectories");
    const SharedStages shared = train_shared(c, dataset, progress);
    if (observe) observe(c, dataset, shared);
    const double y_star = c.planner.y_star(dataset.y_max);
    for (const AblationVariant& v : ablation_variants(c.planner)) {
      FineTuned tuned = fine_tune(c, shared, dataset, v.planner);
      AblationRow row;
      row.seed = seed;
      row.variant = v.name;
      row.lp = shared.lp;
      row.diverged = tuned.training.diverged;
      row.validation_l = tuned.training.log.empty() ? 0.0 : tuned.training.log.back().validation_l;
      row.planner_lipschitz = planner_lipschitz_on_grid(c, tuned.planner, dataset, y_star).estimate;
      row.groups = evaluate_method(c, profiles, tuned.planner, shared.controller, y_star);
      const MetricsSummary& all = find_group(row.groups, "all").summary;
      say(progress, "  " + v.name + ": GMV " + fixed(all.gmv, 2) + ", cost " + fixed(all.cost, 2) +
                        ", bad case rate " + fixed(all.bad_case_rate, 3) + ", planner L " +
                        fixed(row.planner_lipschitz, 3));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void cmd_ablate(const ExperimentConfig& config, const ProgressFn& progress) {
  std::filesystem::create_directories(config.out_dir);
  const std::vector<AblationRow> rows = run_ablation(config, progress);
  std::vector<std::string> cols{"seed", "variant", "split", "budget_level", "lp",
                                "planner_lipschitz", "validation_l", "diverged"};
  for (const std::string& c : summary_columns()) cols.push_back(c);
  cols.emplace_back("delta_gmv_vs_bc_pct");
  cols.emplace_back("delta_cost_vs_bc_pct");
  CsvWriter out = csv(config, "ablation.csv", cols);
  for (const AblationRow& r : rows) {
    const AblationRow* bc = nullptr;
    for (const AblationRow& o : rows) {
      if (o.seed == r.seed && o.variant == "bc_only") bc = &o;
    }
    for (const EvalGroup& g : r.groups) {
      std::vector<std::string> row{std::to_string(r.seed), r.variant, g.split,
                                   level_text(g.budget_level), csv_cell(r.lp),
                                   csv_cell(r.planner_lipschitz), csv_cell(r.validation_l),
                                   csv_cell(r.diverged)};
      for (const std::string& c : summary_cells(g.summary)) row.push_back(c);
      const MetricsSummary& b = find_group(bc->groups, g.split, g.budget_level).summary;
      row.push_back(csv_cell(percent_change(g.summary.gmv, b.gmv)));
      row.push_back(csv_cell(percent_change(g.summary.cost, b.cost)));
      out.row(row);
    }
  }
}

}  // namespace bidplan
