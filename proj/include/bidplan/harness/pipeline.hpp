#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bidplan/controller.hpp"
#include "bidplan/dataset.hpp"
#include "bidplan/evaluator.hpp"
#include "bidplan/harness/config.hpp"
#include "bidplan/metrics.hpp"
#include "bidplan/planner.hpp"
#include "bidplan/theory.hpp"

namespace bidplan {

using ProgressFn = std::function<void(const std::string&)>;

// Artifact names inside the output directory.
struct RunPaths {
  std::filesystem::path dir;

  std::filesystem::path dataset() const { return dir / "dataset.jsonl"; }
  std::filesystem::path evaluator() const { return dir / "evaluator.ckpt"; }
  std::filesystem::path controller() const { return dir / "controller.ckpt"; }
  std::filesystem::path planner_bc() const { return dir / "planner_bc.ckpt"; }
  std::filesystem::path planner() const { return dir / "planner.ckpt"; }
};

// Train advertisers contribute trajectories to the dataset; eval advertisers
// never do and form the unseen split.
struct ExperimentProfiles {
  std::vector<AdvertiserProfile> train;
  std::vector<AdvertiserProfile> eval;
};

ExperimentProfiles experiment_profiles(const ExperimentConfig& config);
OfflineDataset build_dataset(const ExperimentConfig& config, const ExperimentProfiles& profiles);

// Stages that do not depend on the planner fine-tuning objective.
struct SharedStages {
  DatasetLipschitz data_lipschitz;
  double lp = 0.0;
  EvaluatorModel evaluator;
  EvaluatorTraining evaluator_training;
  InverseDynamicsModel controller;
  ControllerTraining controller_training;
  PlannerModel planner_bc;
  std::vector<PlannerStepLog> pretrain_log;
};

// Throws TrainingDiverged when a stage produces non-finite values.
SharedStages train_shared(const ExperimentConfig& config, const OfflineDataset& dataset,
                          const ProgressFn& progress = {});

struct FineTuned {
  PlannerModel planner;
  PlannerTraining training;
};

// Starts from the behavior-cloned planner. `planner` carries beta2, beta3 and the
// score weight; its lp is replaced by the shared stage's value when lp is automatic.
FineTuned fine_tune(const ExperimentConfig& config, const SharedStages& shared,
                    const OfflineDataset& dataset, PlannerTrainConfig planner);

struct EvalGroup {
  std::string split;          // "seen", "unseen" or "all"
  double budget_level = 0.0;  // 0 aggregates every level
  MetricsSummary summary;
};

// Rolls the planning policy for every profile and episode. Impression streams
// depend only on (seed, profile, episode), so methods see identical markets.
std::vector<EvalGroup> evaluate_method(const ExperimentConfig& config,
                                       const ExperimentProfiles& profiles,
                                       const PlannerModel& planner,
                                       const InverseDynamicsModel& controller, double y_star);

const EvalGroup& find_group(const std::vector<EvalGroup>& groups, const std::string& split,
                            double budget_level = 0.0);

double percent_change(double value, double baseline);

// CLI entry points. Each reads and writes artifacts under config.out_dir.
std::filesystem::path cmd_gen_data(const ExperimentConfig& config, const ProgressFn& progress = {});
void cmd_train(const ExperimentConfig& config, const ProgressFn& progress = {});
void cmd_eval(const ExperimentConfig& config, const ProgressFn& progress = {});
void cmd_lipschitz_check(const ExperimentConfig& config, const ProgressFn& progress = {});

struct AblationVariant {
  std::string name;
  PlannerTrainConfig planner;
};

// full, no_kl (beta2 = 0), no_lip (beta3 = 0) and bc_only (score weight 0, beta3 = 0).
std::vector<AblationVariant> ablation_variants(const PlannerTrainConfig& base);

struct AblationRow {
  std::uint64_t seed = 0;
  std::string variant;
  double lp = 0.0;
  double planner_lipschitz = 0.0;
  double validation_l = 0.0;
  bool diverged = false;
  std::vector<EvalGroup> groups;
};

// Called once per seed after the shared stages are trained.
using SharedObserver = std::function<void(const ExperimentConfig& seeded,
                                          const OfflineDataset& dataset,
                                          const SharedStages& shared)>;

// Every variant of a seed shares the dataset, evaluator, controller, warm start
// and fine-tuning random stream.
std::vector<AblationRow> run_ablation(const ExperimentConfig& config,
                                      const ProgressFn& progress = {},
                                      const SharedObserver& observe = {});
void cmd_ablate(const ExperimentConfig& config, const ProgressFn& progress = {});

// Max over a condition grid on [0, y_star] of the synchronous transport ratio;
// pair i uses dataset context i mod (number of contexts).
PlannerLipschitz planner_lipschitz_on_grid(const ExperimentConfig& config,
                                           const PlannerModel& planner,
                                           const OfflineDataset& dataset, double y_star);

}  // namespace bidplan
