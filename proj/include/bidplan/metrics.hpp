#pragma once

#include <span>
#include <vector>

#include "bidplan/env.hpp"

namespace bidplan {

struct PathologyFlags {
  bool excessive_step_spend = false;  // some c_t > 0.10 B
  bool forward_pacing = false;        // first ceil(T/4) steps spend > 0.40 B
  bool backward_pacing = false;       // last ceil(T/4) steps spend > 0.40 B
  bool underutilization = false;      // total spend < 0.90 B

  bool any() const {
    return excessive_step_spend || forward_pacing || backward_pacing || underutilization;
  }
  int count() const;
};

PathologyFlags pathology_flags(std::span<const double> costs, double budget);

// Budget counts as exhausted once the remainder drops to this fraction of B.
inline constexpr double kExhaustedFraction = 1e-3;

struct EpisodeMetrics {
  double gmv = 0.0;
  long buy_cnt = 0;
  double cost = 0.0;
  double roi = 0.0;  // 0 when nothing was spent
  bool roi_undefined = false;
  double online_rate = 1.0;
  double cost_rate = 0.0;
  PathologyFlags flags;
};

EpisodeMetrics episode_metrics(const Trajectory& trajectory, double budget);

struct MetricsSummary {
  long episodes = 0;
  double gmv = 0.0;  // means over episodes
  double buy_cnt = 0.0;
  double cost = 0.0;
  double roi = 0.0;  // total gmv / total cost
  double online_rate = 0.0;
  double cost_rate = 0.0;
  double bad_case_rate = 0.0;  // fraction with any pathology flag
};

MetricsSummary summarize(std::span<const EpisodeMetrics> episodes);

}  // namespace bidplan
