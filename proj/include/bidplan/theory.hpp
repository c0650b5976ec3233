#pragma once

#include <span>
#include <utility>
#include <vector>

#include "bidplan/dataset.hpp"
#include "bidplan/env.hpp"
#include "bidplan/planner.hpp"
#include "bidplan/rng.hpp"

namespace bidplan {

// Exact W1 between two equal-size empirical measures of cost sequences under the
// per-pair cost sum_t |a_t - b_t|: minimum assignment cost divided by n.
double empirical_w1(const std::vector<std::vector<double>>& a,
                    const std::vector<std::vector<double>>& b);

struct DatasetLipschitzConfig {
  int bins = 8;         // equal-mass quantile bins over the qualities
  int n_sample = 64;    // members compared per bin; smaller bins are skipped
};

struct BinPairRatio {
  int bin_a = 0;
  int bin_b = 0;
  double w1 = 0.0;
  double condition_gap = 0.0;
  double ratio = 0.0;
};

struct DatasetLipschitz {
  double estimate = 0.0;  // max ratio, normalized units (c * T / B per y / y_m)
  int bins_used = 0;
  std::vector<BinPairRatio> pairs;
};

// Lower bound for the planner constant: max over bin pairs of W1 between the bins'
// cost-sequence samples divided by the gap of their mean normalized conditions.
// Each bin contributes n_sample evenly spaced members of its sorted order.
DatasetLipschitz dataset_lipschitz(const OfflineDataset& dataset,
                                   const DatasetLipschitzConfig& config = {});

struct QualityBoundReport {
  long pairs = 0;
  long compared = 0;  // pairs with non-zero cost distance
  long violations = 0;
  double violation_rate = 0.0;
  double max_ratio = 0.0;  // max |y1 - y2| / ||c1 - c2||
  double bound = 0.0;      // sqrt(T) * R_m
};

// Rolls pairs of action sequences through one shared impression stream per pair
// (fresh random profile each pair) and counts |y1 - y2| > bound * distance * (1 + 1e-9).
QualityBoundReport check_quality_bound(const EnvConfig& config, long n_pairs, Rng& rng);

// Empirical Lipschitz ratio of trajectory quality over same-profile dataset pairs.
double quality_lipschitz(const OfflineDataset& dataset, int n_pairs, Rng& rng);

struct PlannerLipschitz {
  double estimate = 0.0;
  std::vector<double> ratios;  // per condition pair, NaN-free, identical pairs skipped
};

// max over pairs of W1_sync(y1, y2) / (|y1 - y2| / y_m).
PlannerLipschitz planner_lipschitz(const PlannerModel& model,
                                   const std::vector<std::pair<double, double>>& grid,
                                   std::span<const double> feature, int n_noise, Rng& rng);

// `count` condition pairs drawn uniformly from [low, high].
std::vector<std::pair<double, double>> condition_grid(double low, double high, int count,
                                                      Rng& rng);

}  // namespace bidplan
