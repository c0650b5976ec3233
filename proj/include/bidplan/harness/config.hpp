#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bidplan/controller.hpp"
#include "bidplan/dataset.hpp"
#include "bidplan/env.hpp"
#include "bidplan/evaluator.hpp"
#include "bidplan/grad/causal.hpp"
#include "bidplan/planner.hpp"
#include "bidplan/theory.hpp"

namespace bidplan {

struct BehaviorSuite {
  std::vector<BehaviorKind> kinds{BehaviorKind::constant_alpha, BehaviorKind::noisy_constant,
                                  BehaviorKind::pid_pacing};
  double grid_low = 0.5;
  double grid_high = 1.3;
  int grid_points = 9;
  double noise_scale = 0.3;
  double pid_kp = 3.0;
  double pid_ki = 0.3;
  double pid_target = 0.9;
  double pid_noise = 0.1;

  std::vector<BehaviorPolicySpec> specs() const;
};

// Everything an experiment needs. Defaults are the desk-scale profile.
struct ExperimentConfig {
  EnvConfig env;
  int train_profiles = 20;
  int eval_profiles = 10;
  std::vector<double> budget_levels{1500.0, 2000.0, 2500.0, 3000.0};
  int episodes_per_pair = 33;
  BehaviorSuite behavior;

  EvaluatorConfig evaluator;
  ControllerConfig controller;
  CausalNetConfig planner_net;
  double sigma = 0.05;
  PlannerTrainConfig planner;
  bool lp_auto = true;
  double lp_factor = 1.3;
  DatasetLipschitzConfig lipschitz;

  int eval_episodes = 4;  // episodes per evaluation profile and method
  int planner_grid = 20;
  int planner_noise = 64;

  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::filesystem::path out_dir = "runs/default";

  ExperimentConfig();

  // Applies one "key = value" setting; throws std::invalid_argument naming the key.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  std::vector<std::string> keys() const;

  // Canonical key -> value text for every setting except the output location.
  std::map<std::string, std::string> canonical() const;
  // 16 hex digits of FNV-1a over the canonical text; independent of file field order.
  std::string digest() const;

  void validate() const;
};

// Reads "key = value" lines. '#' starts a comment; "[section]" prefixes later
// keys with "section.". Unknown keys are errors.
ExperimentConfig load_config(const std::filesystem::path& path);
void apply_config_text(ExperimentConfig& config, const std::string& text,
                       const std::string& origin = "<text>");

}  // namespace bidplan
