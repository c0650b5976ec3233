#include "bidplan/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace bidplan {

int PathologyFlags::count() const {
  return static_cast<int>(excessive_step_spend) + static_cast<int>(forward_pacing) +
         static_cast<int>(backward_pacing) + static_cast<int>(underutilization);
}

PathologyFlags pathology_flags(std::span<const double> costs, double budget) {
  PathologyFlags flags;
  const std::size_t horizon = costs.size();
  if (horizon == 0) return flags;
  const std::size_t quarter = (horizon + 3) / 4;
  double total = 0.0;
  double head = 0.0;
  double tail = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    const double c = costs[t];
    total += c;
    if (t < quarter) head += c;
    if (t >= horizon - quarter) tail += c;
    if (c > 0.10 * budget) flags.excessive_step_spend = true;
  }
  flags.forward_pacing = head > 0.40 * budget;
  flags.backward_pacing = tail > 0.40 * budget;
  flags.underutilization = total < 0.90 * budget;
  return flags;
}

EpisodeMetrics episode_metrics(const Trajectory& trajectory, double budget) {
  EpisodeMetrics m;
  const int horizon = trajectory.horizon();
  m.gmv = trajectory_quality(trajectory);
  double remaining = budget;
  int exhausted_at = horizon;
  for (int t = 0; t < horizon; ++t) {
    m.cost += trajectory.costs[static_cast<std::size_t>(t)];
    m.buy_cnt += trajectory.buy_counts[static_cast<std::size_t>(t)];
    remaining -= trajectory.costs[static_cast<std::size_t>(t)];
    if (exhausted_at == horizon && budget > 0.0 && remaining <= kExhaustedFraction * budget) {
      exhausted_at = t + 1;
    }
  }
  m.roi_undefined = m.cost <= 0.0;
  m.roi = m.roi_undefined ? 0.0 : m.gmv / m.cost;
  m.online_rate = horizon > 0 ? static_cast<double>(exhausted_at) / horizon : 1.0;
  m.cost_rate = budget > 0.0 ? m.cost / budget : 0.0;
  m.flags = pathology_flags(trajectory.costs, budget);
  return m;
}

MetricsSummary summarize(std::span<const EpisodeMetrics> episodes) {
  MetricsSummary s;
  s.episodes = static_cast<long>(episodes.size());
  if (episodes.empty()) return s;
  double total_gmv = 0.0;
  double total_cost = 0.0;
  long bad = 0;
  for (const EpisodeMetrics& e : episodes) {
    total_gmv += e.gmv;
    total_cost += e.cost;
    s.buy_cnt += static_cast<double>(e.buy_cnt);
    s.online_rate += e.online_rate;
    s.cost_rate += e.cost_rate;
    bad += e.flags.any() ? 1 : 0;
  }
  const double n = static_cast<double>(episodes.size());
  s.gmv = total_gmv / n;
  s.cost = total_cost / n;
  s.buy_cnt /= n;
  s.online_rate /= n;
  s.cost_rate /= n;
  s.roi = total_cost > 0.0 ? total_gmv / total_cost : 0.0;
  s.bad_case_rate = static_cast<double>(bad) / n;
  return s;
}

}  // namespace bidplan
