#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "bidplan/dataset.hpp"
#include "support.hpp"

using namespace bidplan;

namespace {

void check_same(const OfflineDataset& a, const OfflineDataset& b) {
  REQUIRE(a.size() == b.size());
  CHECK(a.y_max == b.y_max);
  CHECK(a.roi_max_observed == b.roi_max_observed);
  CHECK(a.meta.seed == b.meta.seed);
  CHECK(a.meta.config_digest == b.meta.config_digest);
  CHECK(a.meta.horizon == b.meta.horizon);
  CHECK(a.condition_histogram.counts == b.condition_histogram.counts);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Trajectory& x = a.trajectories[i];
    const Trajectory& y = b.trajectories[i];
    CHECK(x.profile_id == y.profile_id);
    CHECK(x.feature == y.feature);
    CHECK(x.budget == y.budget);
    CHECK(x.actions == y.actions);
    CHECK(x.costs == y.costs);
    CHECK(x.rewards == y.rewards);
    CHECK(x.buy_counts == y.buy_counts);
    CHECK(x.quality == y.quality);
  }
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("generated dataset satisfies the dataset invariants") {
    const OfflineDataset ds = test::small_dataset(4, 5);
    CHECK(ds.size() == 4u * 3u * 5u);
    double brute = 0.0;
    std::set<std::size_t> feature_sizes;
    for (const Trajectory& t : ds.trajectories) {
      brute = std::max(brute, std::accumulate(t.rewards.begin(), t.rewards.end(), 0.0));
      CHECK(t.quality >= 0.0);
      CHECK(t.quality <= ds.y_max);
      CHECK(std::accumulate(t.costs.begin(), t.costs.end(), 0.0) <= t.budget);
      feature_sizes.insert(t.feature.size());
    }
    CHECK(ds.y_max == doctest::Approx(brute).epsilon(1e-12));
    CHECK(ds.y_max > 0.0);
    CHECK(feature_sizes.size() == 1u);
    CHECK(ds.roi_max_observed <= 5.0);
  }

  TEST_CASE("a zero-action policy produces a dataset with zero y_m") {
    const EnvConfig env = test::small_env();
    Rng rng = make_rng(1, Stream::profiles);
    const auto profiles = make_profiles(env, 1, 0, {}, rng);
    BehaviorPolicySpec idle;
    idle.grid_low = idle.grid_high = 0.0;
    idle.grid_points = 1;
    const OfflineDataset ds = generate_dataset(env, profiles, {idle}, 1, 1);
    CHECK(ds.size() == 1u);
    CHECK(ds.y_max == 0.0);
  }

  TEST_CASE("same seed regenerates a byte-identical file") {
    test::TempDir dir("regen");
    save_dataset(test::small_dataset(3, 4, 21), dir.path() / "a.jsonl");
    save_dataset(test::small_dataset(3, 4, 21), dir.path() / "b.jsonl");
    save_dataset(test::small_dataset(3, 4, 22), dir.path() / "c.jsonl");
    const std::string a = test::read_file(dir.path() / "a.jsonl");
    CHECK(!a.empty());
    CHECK(a == test::read_file(dir.path() / "b.jsonl"));
    CHECK(a != test::read_file(dir.path() / "c.jsonl"));
  }

  TEST_CASE("save and load round-trip exactly") {
    test::TempDir dir("roundtrip");
    OfflineDataset ds = test::small_dataset(3, 4, 23);
    ds.meta.config_digest = "0123456789abcdef";
    save_dataset(ds, dir.path() / "d.jsonl");
    check_same(ds, load_dataset(dir.path() / "d.jsonl"));
  }

  TEST_CASE("empty dataset round-trips as a header-only file") {
    test::TempDir dir("empty");
    OfflineDataset ds;
    ds.meta.horizon = 8;
    save_dataset(ds, dir.path() / "e.jsonl");
    const std::string text = test::read_file(dir.path() / "e.jsonl");
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    const OfflineDataset back = load_dataset(dir.path() / "e.jsonl");
    CHECK(back.empty());
    CHECK(back.y_max == 0.0);
  }

  TEST_CASE("load reports the offending field") {
    test::TempDir dir("corrupt");
    save_dataset(test::small_dataset(2, 2, 24), dir.path() / "ok.jsonl");
    std::ifstream in(dir.path() / "ok.jsonl");
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    REQUIRE(lines.size() >= 2u);

    auto write_with = [&](const std::string& field, const nlohmann::json& value) {
      nlohmann::json rec = nlohmann::json::parse(lines[1]);
      rec[field] = value;
      std::ofstream out(dir.path() / "bad.jsonl");
      out << lines[0] << '\n' << rec.dump() << '\n';
      for (std::size_t i = 2; i < lines.size(); ++i) out << lines[i] << '\n';
    };

    nlohmann::json rec = nlohmann::json::parse(lines[1]);
    std::vector<double> costs = rec["costs"].get<std::vector<double>>();
    costs[0] = -1.0;
    write_with("costs", costs);
    try {
      load_dataset(dir.path() / "bad.jsonl");
      FAIL("negative cost accepted");
    } catch (const DatasetLoadError& e) {
      CHECK(e.field() == "costs");
      CHECK(e.line() == 2u);
      CHECK(std::string(e.what()).find("costs") != std::string::npos);
    }

    write_with("quality", rec["quality"].get<double>() + 1.0);
    try {
      load_dataset(dir.path() / "bad.jsonl");
      FAIL("inconsistent quality accepted");
    } catch (const DatasetLoadError& e) {
      CHECK(e.field() == "quality");
    }

    CHECK_THROWS_AS(load_dataset(dir.path() / "missing.jsonl"), std::runtime_error);
  }

  TEST_CASE("sample_batch is reproducible and labels items with their quality") {
    OfflineDataset ds;
    for (int i = 0; i < 3; ++i) {
      ds.trajectories.push_back(
          test::make_trajectory(i, 10.0, {1.0, 1.0}, {static_cast<double>(i + 1), 0.0}));
    }
    refresh_stats(ds);
    Rng a = make_rng(1, Stream::dataset);
    Rng b = make_rng(1, Stream::dataset);
    const auto x = sample_batch(ds, 3, a);
    const auto y = sample_batch(ds, 3, b);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(x[i].trajectory == y[i].trajectory);
      CHECK(x[i].condition == x[i].trajectory->quality);
    }

    const int n = 100000;
    std::map<const Trajectory*, int> counts;
    for (const LabeledSample& s : sample_batch(ds, n, a)) ++counts[s.trajectory];
    REQUIRE(counts.size() == 3u);
    const double p = 1.0 / 3.0;
    const double sd = std::sqrt(n * p * (1.0 - p));
    double chi2 = 0.0;
    for (const auto& [t, c] : counts) {
      CHECK(std::abs(c - n * p) <= 3.0 * sd);
      chi2 += (c - n * p) * (c - n * p) / (n * p);
    }
    CHECK(chi2 < 13.82);  // 0.999 quantile, 2 degrees of freedom
  }

  TEST_CASE("perturbed pairs with zero noise are identical") {
    const OfflineDataset ds = test::small_dataset(2, 3, 25);
    Rng rng = make_rng(2, Stream::dataset);
    for (const auto& [a, b] : sample_pairs(ds, 50, PairMode::perturbed, rng, 0.0)) {
      CHECK(trajectory_distance(a, b) == 0.0);
    }
    for (const auto& [a, b] : sample_pairs(ds, 50, PairMode::perturbed, rng, 0.1)) {
      const double unit = a.budget / a.horizon();
      for (std::size_t t = 0; t < a.costs.size(); ++t) {
        CHECK(b.costs[t] >= 0.0);
        CHECK(std::abs(b.costs[t] - a.costs[t]) <= 0.1 * unit + 1e-12);
      }
    }
  }

  TEST_CASE("random pairs share the advertiser") {
    const OfflineDataset ds = test::small_dataset(4, 3, 26);
    Rng rng = make_rng(3, Stream::dataset);
    for (const auto& [a, b] : sample_pairs(ds, 200, PairMode::random, rng)) {
      CHECK(a.profile_id == b.profile_id);
      CHECK(a.feature == b.feature);
      CHECK(a.budget == b.budget);
    }
  }

  TEST_CASE("condition statistics") {
    OfflineDataset ds;
    for (double q : {1.0, 2.0, 3.0}) {
      ds.trajectories.push_back(test::make_trajectory(0, 10.0, {1.0}, {q}));
    }
    CHECK(condition_stats(ds).y_max == 3.0);

    OfflineDataset one;
    one.trajectories.push_back(test::make_trajectory(0, 10.0, {1.0}, {2.5}));
    const ConditionStats s = condition_stats(one, 8);
    CHECK(std::count_if(s.histogram.counts.begin(), s.histogram.counts.end(),
                        [](std::int64_t c) { return c > 0; }) == 1);
    CHECK(std::accumulate(s.histogram.counts.begin(), s.histogram.counts.end(), std::int64_t{0}) ==
          1);
  }
}
