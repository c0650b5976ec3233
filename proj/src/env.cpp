#include "bidplan/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bidplan {

namespace {

constexpr int kMaxResamples = 64;

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void EnvConfig::validate() const {
  require(horizon >= 1, "env: horizon must be >= 1");
  require(budget_min >= 0.0 && budget_max >= budget_min, "env: invalid budget range");
  require(impressions_min >= 1 && impressions_max >= impressions_min,
          "env: invalid impression count range");
  require(value_max > 0.0, "env: value_max must be positive");
  require(price_max > 0.0, "env: price_max must be positive");
  require(roi_cap > 0.0 && std::isfinite(roi_cap), "env: roi_cap must be positive and finite");
  require(value_scale_min > 0.0 && value_scale_max >= value_scale_min && value_scale_max <= 1.0,
          "env: value scale range must lie in (0, 1]");
  require(price_log_mean_max >= price_log_mean_min, "env: invalid price level range");
  require(price_log_sd > 0.0, "env: price_log_sd must be positive");
  require(volume_spread >= 0.0 && volume_spread < 1.0, "env: volume_spread must be in [0, 1)");
  require(market_headroom >= 0.0 && std::isfinite(market_headroom),
          "env: market_headroom must be >= 0");
}

AdvertiserProfile make_profile(const EnvConfig& config, int id, double budget, Rng& rng) {
  config.validate();
  if (budget < 0.0) throw std::invalid_argument("env: negative budget");
  AdvertiserProfile p;
  p.id = id;
  p.budget = budget;
  p.value_scale = uniform(rng, config.value_scale_min, config.value_scale_max);
  p.price_log_mean = uniform(rng, config.price_log_mean_min, config.price_log_mean_max);
  p.price_log_sd = config.price_log_sd;

  double center = uniform(rng, config.impressions_min, config.impressions_max);
  if (config.market_headroom > 0.0) {
    const double need = config.market_headroom * budget / config.horizon;
    const double mean_price = std::exp(p.price_log_mean + 0.5 * p.price_log_sd * p.price_log_sd);
    const double top = config.impressions_max / (1.0 + config.volume_spread);
    if (center * mean_price < need) center = std::max(center, std::min(need / mean_price, top));
    if (center * mean_price < need) {
      p.price_log_mean = std::log(need / center) - 0.5 * p.price_log_sd * p.price_log_sd;
    }
  }
  const double half = config.volume_spread * center;
  p.impressions_min = std::clamp(static_cast<int>(std::lround(center - half)),
                                 config.impressions_min, config.impressions_max);
  p.impressions_max = std::clamp(static_cast<int>(std::lround(center + half)),
                                 p.impressions_min, config.impressions_max);

  const double price_span = config.price_log_mean_max - config.price_log_mean_min;
  const double price_level =
      price_span > 0.0 ? (p.price_log_mean - config.price_log_mean_min) / price_span : 0.5;
  const double volume_level =
      0.5 * (p.impressions_min + p.impressions_max) / static_cast<double>(config.impressions_max);
  const double budget_level = config.budget_max > 0.0 ? budget / config.budget_max : 0.0;
  p.feature = {budget_level, p.value_scale, price_level, volume_level};
  return p;
}

std::vector<AdvertiserProfile> make_profiles(const EnvConfig& config, int count, int first_id,
                                             std::span<const double> budget_levels, Rng& rng) {
  std::vector<AdvertiserProfile> profiles;
  profiles.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    const double budget =
        budget_levels.empty()
            ? uniform(rng, config.budget_min, config.budget_max)
            : budget_levels[static_cast<std::size_t>(i) % budget_levels.size()];
    profiles.push_back(make_profile(config, first_id + i, budget, rng));
  }
  return profiles;
}

ImpressionBatch sample_impressions(const EnvConfig& config, const AdvertiserProfile& profile,
                                   int t, Rng& rng) {
  if (t < 1 || t > config.horizon) throw std::domain_error("env: step index out of range");
  const int count =
      std::uniform_int_distribution<int>(profile.impressions_min, profile.impressions_max)(rng);
  std::lognormal_distribution<double> price_dist(profile.price_log_mean, profile.price_log_sd);
  const double value_top = profile.value_scale * config.value_max;

  ImpressionBatch batch;
  batch.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Impression imp;
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxResamples && !accepted; ++attempt) {
      // 1 - U[0,1) lies in (0, 1], so the value is strictly positive.
      imp.value = value_top * (1.0 - std::generate_canonical<double, 53>(rng));
      imp.market_price = price_dist(rng);
      accepted = imp.market_price <= config.price_max &&
                 imp.value <= config.roi_cap * imp.market_price;
    }
    if (!accepted) {
      imp.market_price = std::clamp(imp.market_price, imp.value / config.roi_cap, config.price_max);
      imp.value = std::min(imp.value, config.roi_cap * imp.market_price);
    }
    batch.push_back(imp);
  }
  return batch;
}

ImpressionStream sample_stream(const EnvConfig& config, const AdvertiserProfile& profile,
                               Rng& rng) {
  ImpressionStream stream;
  stream.reserve(static_cast<std::size_t>(config.horizon));
  for (int t = 1; t <= config.horizon; ++t) {
    stream.push_back(sample_impressions(config, profile, t, rng));
  }
  return stream;
}

StepOutcome auction_step(const BidState& state, double action,
                         std::span<const Impression> impressions) {
  if (!(action >= 0.0) || !std::isfinite(action)) {
    throw std::domain_error("env: action must be finite and non-negative");
  }
  if (!(state.remaining_budget >= 0.0)) {
    throw std::domain_error("env: remaining budget must be non-negative");
  }
  StepOutcome out;
  double spent = 0.0;
  for (const Impression& imp : impressions) {
    if (action * imp.value < imp.market_price) continue;
    const double after = spent + imp.market_price;
    if (after > state.remaining_budget) continue;
    spent = after;
    out.reward += imp.value;
    ++out.buy_count;
  }
  out.cost = spent;
  out.next_state.t = state.t + 1;
  out.next_state.prev_cost = spent;
  out.next_state.feature = state.feature;
  out.next_state.remaining_budget = state.remaining_budget - spent;
  return out;
}

BidState initial_state(const AdvertiserProfile& profile) {
  BidState s;
  s.t = 1;
  s.prev_cost = 0.0;
  s.feature = profile.feature;
  s.remaining_budget = profile.budget;
  return s;
}

namespace {

template <typename BatchSource>
Trajectory rollout(const EnvConfig& config, const AdvertiserProfile& profile, const Policy& policy,
                   BatchSource&& next_batch) {
  const auto horizon = static_cast<std::size_t>(config.horizon);
  Trajectory traj;
  traj.profile_id = profile.id;
  traj.feature = profile.feature;
  traj.budget = profile.budget;
  traj.actions.reserve(horizon);
  traj.costs.reserve(horizon);
  traj.rewards.reserve(horizon);
  traj.buy_counts.reserve(horizon);

  BidState state = initial_state(profile);
  for (int t = 1; t <= config.horizon; ++t) {
    const double action = policy(state, std::span<const double>(traj.costs));
    if (!(action >= 0.0) || !std::isfinite(action)) {
      throw std::domain_error("env: policy emitted invalid action " + std::to_string(action) +
                              " at step " + std::to_string(t) + " for profile " +
                              std::to_string(profile.id));
    }
    const ImpressionBatch& batch = next_batch(t);
    StepOutcome out = auction_step(state, action, batch);
    traj.actions.push_back(action);
    traj.costs.push_back(out.cost);
    traj.rewards.push_back(out.reward);
    traj.buy_counts.push_back(out.buy_count);
    state = std::move(out.next_state);
  }
  traj.quality = trajectory_quality(traj);
  return traj;
}

}  // namespace

Trajectory run_episode(const EnvConfig& config, const AdvertiserProfile& profile,
                       const Policy& policy, Rng& rng, ImpressionStats* stats) {
  ImpressionBatch batch;
  return rollout(config, profile, policy, [&](int t) -> const ImpressionBatch& {
    batch = sample_impressions(config, profile, t, rng);
    if (stats != nullptr) {
      for (const Impression& imp : batch) {
        stats->max_roi = std::max(stats->max_roi, imp.value / imp.market_price);
      }
      stats->count += static_cast<std::int64_t>(batch.size());
    }
    return batch;
  });
}

Trajectory run_episode(const EnvConfig& config, const AdvertiserProfile& profile,
                       const Policy& policy, const ImpressionStream& stream) {
  if (static_cast<int>(stream.size()) != config.horizon) {
    throw std::domain_error("env: impression stream length does not match horizon");
  }
  return rollout(config, profile, policy, [&](int t) -> const ImpressionBatch& {
    return stream[static_cast<std::size_t>(t - 1)];
  });
}

BidState Trajectory::state_at(int t) const {
  if (t < 1 || t > horizon()) throw std::domain_error("trajectory: step index out of range");
  BidState s;
  s.t = t;
  s.feature = feature;
  s.prev_cost = t > 1 ? costs[static_cast<std::size_t>(t - 2)] : 0.0;
  double remaining = budget;
  for (int j = 0; j < t - 1; ++j) remaining -= costs[static_cast<std::size_t>(j)];
  s.remaining_budget = remaining;
  return s;
}

std::vector<BidState> Trajectory::states() const {
  std::vector<BidState> out;
  out.reserve(costs.size());
  double remaining = budget;
  for (int t = 1; t <= horizon(); ++t) {
    BidState s;
    s.t = t;
    s.feature = feature;
    s.prev_cost = t > 1 ? costs[static_cast<std::size_t>(t - 2)] : 0.0;
    s.remaining_budget = remaining;
    remaining -= costs[static_cast<std::size_t>(t - 1)];
    out.push_back(std::move(s));
  }
  return out;
}

double trajectory_quality(const Trajectory& trajectory) {
  const std::size_t n = trajectory.costs.size();
  if (trajectory.rewards.size() != n || trajectory.actions.size() != n ||
      trajectory.buy_counts.size() != n) {
    throw std::domain_error("trajectory: sequence length mismatch");
  }
  double total = 0.0;
  for (double r : trajectory.rewards) total += r;
  return total;
}

double trajectory_distance(const Trajectory& a, const Trajectory& b) {
  if (a.costs.size() != b.costs.size()) {
    throw std::domain_error("trajectory_distance: horizon mismatch");
  }
  if (a.feature != b.feature) {
    throw std::domain_error("trajectory_distance: trajectories belong to different profiles");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.costs.size(); ++i) {
    const double d = a.costs[i] - b.costs[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double uniform_pacing_alpha(const EnvConfig& config, const AdvertiserProfile& profile, Rng& rng,
                            int samples) {
  if (samples < 1) throw std::invalid_argument("uniform_pacing_alpha: samples must be >= 1");
  std::vector<Impression> pool;
  pool.reserve(static_cast<std::size_t>(samples));
  while (static_cast<int>(pool.size()) < samples) {
    ImpressionBatch batch = sample_impressions(config, profile, 1, rng);
    for (const Impression& imp : batch) {
      if (static_cast<int>(pool.size()) == samples) break;
      pool.push_back(imp);
    }
  }
  std::sort(pool.begin(), pool.end(), [](const Impression& x, const Impression& y) {
    return x.market_price / x.value < y.market_price / y.value;
  });
  const double mean_count = 0.5 * (profile.impressions_min + profile.impressions_max);
  // Expected spend of one sampled impression, scaled to the whole episode.
  const double scale = mean_count * config.horizon / static_cast<double>(pool.size());
  double spend = 0.0;
  for (const Impression& imp : pool) {
    spend += imp.market_price * scale;
    if (spend >= profile.budget) return imp.market_price / imp.value;
  }
  return pool.back().market_price / pool.back().value;
}

}  // namespace bidplan
