#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bidplan/env.hpp"
#include "bidplan/rng.hpp"

namespace bidplan {

enum class BehaviorKind { constant_alpha, noisy_constant, pid_pacing };

const char* to_string(BehaviorKind kind);
BehaviorKind behavior_kind_from_string(const std::string& name);

// A scripted data-collection policy. Scaling factors are expressed as
// multiples of the profile's uniform-pacing alpha: each episode draws a
// multiplier uniformly from the grid {grid_low, ..., grid_high}.
struct BehaviorPolicySpec {
  BehaviorKind kind = BehaviorKind::constant_alpha;
  double grid_low = 0.5;
  double grid_high = 1.5;
  int grid_points = 11;
  double noise_scale = 0.0;    // per-step Gaussian noise, relative to the base factor
  double target_spend = 1.0;   // pid: fraction of budget to spend over the horizon
  double kp = 0.0;             // pid gains on the budget-normalized spend error
  double ki = 0.0;
  double action_max = 1000.0;

  void validate() const;
};

// Instantiates one episode of the behavior policy. `reference_alpha` is the
// profile's uniform-pacing factor; `rng` drives the per-episode draw and any
// per-step noise and must outlive the returned policy.
Policy make_behavior_policy(const BehaviorPolicySpec& spec, const AdvertiserProfile& profile,
                            int horizon, double reference_alpha, Rng& rng);

struct Histogram {
  double low = 0.0;
  double high = 0.0;
  std::vector<std::int64_t> counts;
};

struct ConditionStats {
  double y_max = 0.0;
  Histogram histogram;
  double roi_max_observed = 0.0;
};

struct DatasetMeta {
  int schema_version = 1;
  std::uint64_t seed = 0;
  std::string config_digest;
  int horizon = 0;
  double roi_cap = 0.0;
};

struct OfflineDataset {
  std::vector<Trajectory> trajectories;
  double y_max = 0.0;
  Histogram condition_histogram;
  double roi_max_observed = 0.0;
  DatasetMeta meta;

  bool empty() const { return trajectories.empty(); }
  std::size_t size() const { return trajectories.size(); }
  // Trajectory indices grouped by profile id.
  std::map<int, std::vector<std::size_t>> by_profile() const;
};

inline constexpr int kDefaultHistogramBins = 32;

OfflineDataset generate_dataset(const EnvConfig& config,
                                const std::vector<AdvertiserProfile>& profiles,
                                const std::vector<BehaviorPolicySpec>& policies,
                                int episodes_per_pair, std::uint64_t seed);

ConditionStats condition_stats(const OfflineDataset& dataset, int bins = kDefaultHistogramBins);

// Recomputes y_max and the histogram from the stored trajectories.
void refresh_stats(OfflineDataset& dataset, int bins = kDefaultHistogramBins);

class DatasetLoadError : public std::runtime_error {
 public:
  DatasetLoadError(std::size_t line, std::string field, const std::string& what);
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// One JSON object per line: a header, then one trajectory per line. Reals are
// written with 17 significant digits so the round trip is exact.
void save_dataset(const OfflineDataset& dataset, const std::filesystem::path& path);
OfflineDataset load_dataset(const std::filesystem::path& path);

std::string format_real(double value);

struct LabeledSample {
  const Trajectory* trajectory = nullptr;
  double condition = 0.0;
};

std::vector<LabeledSample> sample_batch(const OfflineDataset& dataset, int n, Rng& rng);

enum class PairMode { random, perturbed };

// Random pairs share a profile. A perturbed pair is (tau, tau') where tau' adds
// uniform noise in [-noise_scale, noise_scale] * (budget / horizon) to every cost,
// clipped at zero.
std::vector<std::pair<Trajectory, Trajectory>> sample_pairs(const OfflineDataset& dataset, int n,
                                                            PairMode mode, Rng& rng,
                                                            double noise_scale = 0.1);

}  // namespace bidplan
