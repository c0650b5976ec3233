#include "bidplan/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bidplan/assignment.hpp"

namespace bidplan {

double empirical_w1(const std::vector<std::vector<double>>& a,
                    const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size()) throw std::domain_error("empirical_w1: sample sizes differ");
  if (a.empty()) throw std::domain_error("empirical_w1: empty samples");
  const std::size_t n = a.size();
  const std::size_t len = a.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].size() != len || b[i].size() != len) {
      throw std::domain_error("empirical_w1: sequence lengths differ");
    }
  }
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < len; ++t) s += std::abs(a[i][t] - b[j][t]);
      cost[i * n + j] = s;
    }
  }
  const int size = static_cast<int>(n);
  return solve_assignment(cost, size, size).cost / static_cast<double>(n);
}

DatasetLipschitz dataset_lipschitz(const OfflineDataset& dataset,
                                   const DatasetLipschitzConfig& config) {
  if (config.bins < 2 || config.n_sample < 1) {
    throw std::domain_error("dataset_lipschitz: need bins >= 2 and n_sample >= 1");
  }
  if (dataset.empty() || !(dataset.y_max > 0.0)) {
    throw std::domain_error("dataset_lipschitz: dataset has no positive qualities");
  }
  const auto& trajs = dataset.trajectories;
  const int horizon = trajs.front().horizon();
  std::vector<std::vector<double>> units(trajs.size());
  std::vector<double> totals(trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    units[i] = normalize_costs(trajs[i].costs, trajs[i].budget, horizon);
    totals[i] = std::accumulate(units[i].begin(), units[i].end(), 0.0);
  }
  // Sort by quality, then total spend, then the sequence itself, so the order
  // (and therefore the bins and their members) is fully determined by content.
  std::vector<std::size_t> order(trajs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (trajs[x].quality != trajs[y].quality) return trajs[x].quality < trajs[y].quality;
    if (totals[x] != totals[y]) return totals[x] < totals[y];
    return units[x] < units[y];
  });

  struct Bin {
    int index;
    double condition;
    std::vector<std::vector<double>> sample;
  };
  std::vector<Bin> bins;
  const std::size_t n = order.size();
  const auto k = static_cast<std::size_t>(config.n_sample);
  for (int b = 0; b < config.bins; ++b) {
    const std::size_t lo = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(config.bins);
    const std::size_t hi =
        n * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(config.bins);
    const std::size_t m = hi - lo;
    if (m < k) continue;
    Bin bin{b, 0.0, {}};
    for (std::size_t i = lo; i < hi; ++i) bin.condition += trajs[order[i]].quality;
    bin.condition /= static_cast<double>(m) * dataset.y_max;
    for (std::size_t s = 0; s < k; ++s) {
      const std::size_t pos = lo + (2 * s + 1) * m / (2 * k);
      bin.sample.push_back(units[order[pos]]);
    }
    bins.push_back(std::move(bin));
  }
  if (bins.size() < 2) {
    throw std::domain_error("dataset_lipschitz: fewer than two bins with enough members");
  }

  DatasetLipschitz out;
  out.bins_used = static_cast<int>(bins.size());
  for (std::size_t i = 0; i < bins.size(); ++i) {
    for (std::size_t j = i + 1; j < bins.size(); ++j) {
      const double gap = std::abs(bins[i].condition - bins[j].condition);
      if (gap == 0.0) continue;
      BinPairRatio r;
      r.bin_a = bins[i].index;
      r.bin_b = bins[j].index;
      r.w1 = empirical_w1(bins[i].sample, bins[j].sample);
      r.condition_gap = gap;
      r.ratio = r.w1 / gap;
      out.estimate = std::max(out.estimate, r.ratio);
      out.pairs.push_back(r);
    }
  }
  return out;
}

namespace {

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

Policy replay(const std::vector<double>& actions) {
  return [&actions](const BidState& s, std::span<const double>) {
    return actions[static_cast<std::size_t>(s.t - 1)];
  };
}

}  // namespace

QualityBoundReport check_quality_bound(const EnvConfig& config, long n_pairs, Rng& rng) {
  config.validate();
  if (n_pairs < 1) throw std::domain_error("check_quality_bound: n_pairs must be >= 1");
  QualityBoundReport report;
  report.bound = std::sqrt(static_cast<double>(config.horizon)) * config.roi_cap;
  const auto horizon = static_cast<std::size_t>(config.horizon);
  std::vector<double> a1(horizon);
  std::vector<double> a2(horizon);
  for (long k = 0; k < n_pairs; ++k) {
    const double budget = uniform(rng, config.budget_min, config.budget_max);
    const AdvertiserProfile profile = make_profile(config, static_cast<int>(k), budget, rng);
    const ImpressionStream stream = sample_stream(config, profile, rng);
    const bool local = k % 2 == 1;
    for (std::size_t t = 0; t < horizon; ++t) {
      a1[t] = log_uniform(rng, 0.05, 20.0);
      a2[t] = local ? a1[t] * std::exp(0.1 * standard_normal(rng)) : log_uniform(rng, 0.05, 20.0);
    }
    const Trajectory t1 = run_episode(config, profile, replay(a1), stream);
    const Trajectory t2 = run_episode(config, profile, replay(a2), stream);
    ++report.pairs;
    const double d = trajectory_distance(t1, t2);
    const double dy = std::abs(t1.quality - t2.quality);
    if (d == 0.0) {
      if (dy > 0.0) ++report.violations;
      continue;
    }
    ++report.compared;
    report.max_ratio = std::max(report.max_ratio, dy / d);
    if (dy > report.bound * d * (1.0 + 1e-9)) ++report.violations;
  }
  report.violation_rate = static_cast<double>(report.violations) / static_cast<double>(report.pairs);
  return report;
}

double quality_lipschitz(const OfflineDataset& dataset, int n_pairs, Rng& rng) {
  const auto pairs = sample_pairs(dataset, n_pairs, PairMode::random, rng);
  double best = 0.0;
  for (const auto& [a, b] : pairs) {
    const double d = trajectory_distance(a, b);
    if (d > 0.0) best = std::max(best, std::abs(a.quality - b.quality) / d);
  }
  return best;
}

PlannerLipschitz planner_lipschitz(const PlannerModel& model,
                                   const std::vector<std::pair<double, double>>& grid,
                                   std::span<const double> feature, int n_noise, Rng& rng) {
  PlannerLipschitz out;
  for (const auto& [y1, y2] : grid) {
    const double gap = std::abs(model.normalize_condition(y1) - model.normalize_condition(y2));
    if (gap == 0.0) continue;
    const double ratio = sync_coupled_w1(model, y1, y2, feature, n_noise, rng).mean / gap;
    out.ratios.push_back(ratio);
    out.estimate = std::max(out.estimate, ratio);
  }
  return out;
}

std::vector<std::pair<double, double>> condition_grid(double low, double high, int count,
                                                      Rng& rng) {
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) out.emplace_back(uniform(rng, low, high), uniform(rng, low, high));
  return out;
}

}  // namespace bidplan
