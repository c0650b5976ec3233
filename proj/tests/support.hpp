#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "bidplan/dataset.hpp"
#include "bidplan/env.hpp"
#include "bidplan/grad/causal.hpp"
#include "bidplan/grad/param_vector.hpp"
#include "bidplan/harness/config.hpp"
#include "bidplan/planner.hpp"

namespace bidplan::test {

// Central differences of `value` with respect to every entry of `x`.
inline std::vector<double> numeric_gradient(std::vector<double>& x,
                                            const std::function<double()>& value,
                                            double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = value();
    x[i] = keep - h;
    const double down = value();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

// Small market used by the fast tests.
inline EnvConfig small_env(int horizon = 8) {
  EnvConfig env;
  env.horizon = horizon;
  env.budget_min = 40.0;
  env.budget_max = 120.0;
  env.impressions_min = 10;
  env.impressions_max = 30;
  return env;
}

inline std::vector<BehaviorPolicySpec> default_behaviors() { return BehaviorSuite{}.specs(); }

inline OfflineDataset small_dataset(int profiles = 4, int episodes = 5, std::uint64_t seed = 11,
                                    int horizon = 8) {
  const EnvConfig env = small_env(horizon);
  Rng rng = make_rng(seed, Stream::profiles);
  const auto ps = make_profiles(env, profiles, 0, {}, rng);
  return generate_dataset(env, ps, default_behaviors(), episodes, seed);
}

// mu_t = w * (y / y_m): no history, feature or time input.
inline CausalNetConfig linear_net(int horizon, int feature_dim) {
  CausalNetConfig c;
  c.kind = CausalKind::window;
  c.horizon = horizon;
  c.feature_dim = feature_dim;
  c.window = 0;
  c.hidden = {};
  c.activation = Activation::identity;
  c.use_cumulative = false;
  c.use_time = false;
  return c;
}

inline PlannerModel linear_planner(int horizon, int feature_dim, double w, double y_max,
                                   double sigma = 0.1) {
  PlannerModel m(linear_net(horizon, feature_dim), sigma, y_max);
  m.params().group("mean.w1")[0] = w;
  return m;
}

inline CausalNetConfig small_net(int horizon, CausalKind kind = CausalKind::window) {
  CausalNetConfig c;
  c.kind = kind;
  c.horizon = horizon;
  c.feature_dim = kFeatureDim;
  c.window = 3;
  c.width = 4;
  c.hidden = {6};
  return c;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh directory under the system temp location, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("bidplan_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Hand-built trajectory; quality is the reward sum.
inline Trajectory make_trajectory(int profile_id, double budget, std::vector<double> costs,
                                  std::vector<double> rewards,
                                  std::vector<double> feature = {0.5, 0.8, 0.5, 0.5}) {
  Trajectory t;
  t.profile_id = profile_id;
  t.feature = std::move(feature);
  t.budget = budget;
  t.costs = std::move(costs);
  t.rewards = std::move(rewards);
  t.actions.assign(t.costs.size(), 1.0);
  t.buy_counts.assign(t.costs.size(), 1);
  for (double r : t.rewards) t.quality += r;
  return t;
}

}  // namespace bidplan::test
