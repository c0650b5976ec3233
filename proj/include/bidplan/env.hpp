#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bidplan/rng.hpp"

namespace bidplan {

// Simulator settings. Defaults follow the published simulated-experiment table
// (96 steps, 50-300 impressions per step, budgets 1000-4000, values in (0, 1],
// market prices bounded by 1000).
struct EnvConfig {
  int horizon = 96;
  double budget_min = 1000.0;
  double budget_max = 4000.0;
  int impressions_min = 50;
  int impressions_max = 300;
  double value_max = 1.0;
  double price_max = 1000.0;
  double roi_cap = 5.0;

  // Per-advertiser impression distributions are drawn from these ranges.
  double value_scale_min = 0.6;
  double value_scale_max = 1.0;
  double price_log_mean_min = -1.2;
  double price_log_mean_max = -0.4;
  double price_log_sd = 0.6;
  double volume_spread = 0.2;  // half-width of a profile's count range, relative to its center
  // Minimum ratio of the expected spend from winning every impression to the
  // budget. Profiles falling short get more volume, then higher prices. 0 disables.
  double market_headroom = 2.0;

  void validate() const;
};

struct Impression {
  double value = 0.0;
  double market_price = 0.0;
};

using ImpressionBatch = std::vector<Impression>;
using ImpressionStream = std::vector<ImpressionBatch>;  // one batch per step

inline constexpr int kFeatureDim = 4;

struct AdvertiserProfile {
  int id = 0;
  double budget = 0.0;
  std::vector<double> feature;  // [budget / budget_max, value scale, price level, volume level]
  double value_scale = 1.0;
  double price_log_mean = 0.0;
  double price_log_sd = 0.6;
  int impressions_min = 1;
  int impressions_max = 1;
};

AdvertiserProfile make_profile(const EnvConfig& config, int id, double budget, Rng& rng);

// Budgets are drawn uniformly from [budget_min, budget_max] unless `budget_levels`
// is non-empty, in which case profile i gets budget_levels[i % size].
std::vector<AdvertiserProfile> make_profiles(const EnvConfig& config, int count, int first_id,
                                             std::span<const double> budget_levels, Rng& rng);

struct BidState {
  int t = 1;  // 1-based
  double prev_cost = 0.0;
  std::vector<double> feature;
  double remaining_budget = 0.0;
};

struct StepOutcome {
  double cost = 0.0;
  double reward = 0.0;
  int buy_count = 0;
  BidState next_state;
};

struct Trajectory {
  int profile_id = 0;
  std::vector<double> feature;
  double budget = 0.0;
  std::vector<double> actions;
  std::vector<double> costs;
  std::vector<double> rewards;
  std::vector<int> buy_counts;
  double quality = 0.0;

  int horizon() const { return static_cast<int>(costs.size()); }
  BidState state_at(int t) const;  // 1-based, reconstructed from the cost sequence
  std::vector<BidState> states() const;
};

// Maps the current state and the realized cost history c_1..c_{t-1} to a scaling factor.
using Policy = std::function<double(const BidState&, std::span<const double>)>;

struct ImpressionStats {
  double max_roi = 0.0;
  std::int64_t count = 0;
};

ImpressionBatch sample_impressions(const EnvConfig& config, const AdvertiserProfile& profile,
                                   int t, Rng& rng);

ImpressionStream sample_stream(const EnvConfig& config, const AdvertiserProfile& profile,
                               Rng& rng);

StepOutcome auction_step(const BidState& state, double action,
                         std::span<const Impression> impressions);

BidState initial_state(const AdvertiserProfile& profile);

Trajectory run_episode(const EnvConfig& config, const AdvertiserProfile& profile,
                       const Policy& policy, Rng& rng, ImpressionStats* stats = nullptr);

Trajectory run_episode(const EnvConfig& config, const AdvertiserProfile& profile,
                       const Policy& policy, const ImpressionStream& stream);

double trajectory_quality(const Trajectory& trajectory);

// Euclidean distance between cost sequences; the Frobenius distance of the
// state matrices when step index and feature coincide.
double trajectory_distance(const Trajectory& a, const Trajectory& b);

// Constant scaling factor whose expected spend over the horizon equals the
// budget, estimated from `samples` draws of the profile's impression distribution.
double uniform_pacing_alpha(const EnvConfig& config, const AdvertiserProfile& profile, Rng& rng,
                            int samples = 20000);

}  // namespace bidplan
