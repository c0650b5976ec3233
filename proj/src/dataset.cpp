#include "bidplan/dataset.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace bidplan {

const char* to_string(BehaviorKind kind) {
  switch (kind) {
    case BehaviorKind::constant_alpha: return "constant-alpha";
    case BehaviorKind::noisy_constant: return "noisy-constant";
    case BehaviorKind::pid_pacing: return "pid-pacing";
  }
  return "unknown";
}

BehaviorKind behavior_kind_from_string(const std::string& name) {
  if (name == "constant-alpha") return BehaviorKind::constant_alpha;
  if (name == "noisy-constant") return BehaviorKind::noisy_constant;
  if (name == "pid-pacing") return BehaviorKind::pid_pacing;
  throw std::invalid_argument("unknown behavior policy kind: " + name);
}

void BehaviorPolicySpec::validate() const {
  if (!(grid_low >= 0.0) || !(grid_high >= grid_low) || grid_points < 1) {
    throw std::invalid_argument("behavior policy: invalid multiplier grid");
  }
  if (!(noise_scale >= 0.0) || !(target_spend >= 0.0) || !(action_max > 0.0)) {
    throw std::invalid_argument("behavior policy: invalid parameters");
  }
}

Policy make_behavior_policy(const BehaviorPolicySpec& spec, const AdvertiserProfile& profile,
                            int horizon, double reference_alpha, Rng& rng) {
  spec.validate();
  const std::size_t idx = uniform_index(rng, static_cast<std::size_t>(spec.grid_points));
  const double step =
      spec.grid_points > 1 ? (spec.grid_high - spec.grid_low) / (spec.grid_points - 1) : 0.0;
  const double base = reference_alpha * (spec.grid_low + step * static_cast<double>(idx));
  const double cap = spec.action_max;
  Rng* noise_rng = &rng;

  switch (spec.kind) {
    case BehaviorKind::constant_alpha:
      return [a = std::clamp(base, 0.0, cap)](const BidState&, std::span<const double>) {
        return a;
      };
    case BehaviorKind::noisy_constant:
      return [base, cap, noise = spec.noise_scale, noise_rng](const BidState&,
                                                              std::span<const double>) {
        return std::clamp(base * (1.0 + noise * standard_normal(*noise_rng)), 0.0, cap);
      };
    case BehaviorKind::pid_pacing: {
      const double budget = profile.budget;
      const double target = spec.target_spend;
      return [=](const BidState& state, std::span<const double> history) {
        // Error is the gap between the uniform spend schedule and realized spend,
        // as a fraction of the budget; the integral term sums past errors.
        double spent = 0.0;
        double integral = 0.0;
        for (std::size_t j = 0; j < history.size(); ++j) {
          spent += history[j];
          const double planned = target * budget * static_cast<double>(j + 1) / horizon;
          integral += budget > 0.0 ? (planned - spent) / budget : 0.0;
        }
        const double planned_now = target * budget * (state.t - 1) / static_cast<double>(horizon);
        const double error = budget > 0.0 ? (planned_now - spent) / budget : 0.0;
        double a = base * std::exp(std::clamp(spec.kp * error + spec.ki * integral, -5.0, 5.0));
        if (spec.noise_scale > 0.0) a *= 1.0 + spec.noise_scale * standard_normal(*noise_rng);
        return std::clamp(a, 0.0, cap);
      };
    }
  }
  throw std::invalid_argument("behavior policy: unknown kind");
}

std::map<int, std::vector<std::size_t>> OfflineDataset::by_profile() const {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    groups[trajectories[i].profile_id].push_back(i);
  }
  return groups;
}

OfflineDataset generate_dataset(const EnvConfig& config,
                                const std::vector<AdvertiserProfile>& profiles,
                                const std::vector<BehaviorPolicySpec>& policies,
                                int episodes_per_pair, std::uint64_t seed) {
  if (profiles.empty()) throw std::domain_error("generate_dataset: no advertiser profiles");
  if (policies.empty()) throw std::domain_error("generate_dataset: no behavior policies");
  if (episodes_per_pair < 1) throw std::domain_error("generate_dataset: episodes_per_pair < 1");
  config.validate();

  OfflineDataset ds;
  ds.meta.seed = seed;
  ds.meta.horizon = config.horizon;
  ds.meta.roi_cap = config.roi_cap;
  ds.trajectories.reserve(profiles.size() * policies.size() *
                          static_cast<std::size_t>(episodes_per_pair));
  ImpressionStats stats;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const AdvertiserProfile& profile = profiles[i];
    Rng calibration = make_rng(seed, Stream::calibration, static_cast<std::uint64_t>(profile.id));
    const double reference = uniform_pacing_alpha(config, profile, calibration);
    for (std::size_t j = 0; j < policies.size(); ++j) {
      for (int e = 0; e < episodes_per_pair; ++e) {
        Rng impressions = make_rng(seed, Stream::dataset, i, j, static_cast<std::uint64_t>(e));
        Rng behavior = make_rng(seed, Stream::behavior, i, j, static_cast<std::uint64_t>(e));
        Policy policy =
            make_behavior_policy(policies[j], profile, config.horizon, reference, behavior);
        ds.trajectories.push_back(run_episode(config, profile, policy, impressions, &stats));
      }
    }
  }
  ds.roi_max_observed = stats.max_roi;
  refresh_stats(ds);
  return ds;
}

ConditionStats condition_stats(const OfflineDataset& dataset, int bins) {
  if (bins < 1) throw std::invalid_argument("condition_stats: bins must be >= 1");
  ConditionStats stats;
  stats.roi_max_observed = dataset.roi_max_observed;
  for (const Trajectory& t : dataset.trajectories) stats.y_max = std::max(stats.y_max, t.quality);
  stats.histogram.low = 0.0;
  stats.histogram.high = stats.y_max;
  stats.histogram.counts.assign(static_cast<std::size_t>(bins), 0);
  for (const Trajectory& t : dataset.trajectories) {
    std::size_t bin = 0;
    if (stats.y_max > 0.0) {
      const auto raw = static_cast<std::size_t>(std::floor(t.quality / stats.y_max * bins));
      bin = std::min(raw, static_cast<std::size_t>(bins - 1));
    }
    ++stats.histogram.counts[bin];
  }
  return stats;
}

void refresh_stats(OfflineDataset& dataset, int bins) {
  ConditionStats stats = condition_stats(dataset, bins);
  dataset.y_max = stats.y_max;
  dataset.condition_histogram = std::move(stats.histogram);
}

DatasetLoadError::DatasetLoadError(std::size_t line, std::string field, const std::string& what)
    : std::runtime_error("dataset line " + std::to_string(line) + ", field '" + field +
                         "': " + what),
      line_(line),
      field_(std::move(field)) {}

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

template <typename T>
void write_array(std::ostream& out, const char* name, const std::vector<T>& values) {
  out << '"' << name << "\":[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ',';
    if constexpr (std::is_floating_point_v<T>) {
      out << format_real(values[i]);
    } else {
      out << values[i];
    }
  }
  out << ']';
}

std::string json_escape(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace

void save_dataset(const OfflineDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path.string());
  out << "{\"schema_version\":" << dataset.meta.schema_version << ",\"seed\":" << dataset.meta.seed
      << ",\"config_digest\":" << json_escape(dataset.meta.config_digest)
      << ",\"T\":" << dataset.meta.horizon << ",\"R_m\":" << format_real(dataset.meta.roi_cap)
      << ",\"y_m\":" << format_real(dataset.y_max)
      << ",\"r_m_empirical\":" << format_real(dataset.roi_max_observed)
      << ",\"count\":" << dataset.trajectories.size() << "}\n";
  for (const Trajectory& t : dataset.trajectories) {
    out << "{\"profile_id\":" << t.profile_id << ',';
    write_array(out, "feature", t.feature);
    out << ",\"budget\":" << format_real(t.budget) << ',';
    write_array(out, "costs", t.costs);
    out << ',';
    write_array(out, "actions", t.actions);
    out << ',';
    write_array(out, "rewards", t.rewards);
    out << ',';
    write_array(out, "buy_counts", t.buy_counts);
    out << ",\"quality\":" << format_real(t.quality) << "}\n";
  }
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path.string());
}

namespace {

using nlohmann::json;

const json& field_of(const json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) throw DatasetLoadError(line, name, "missing");
  return *it;
}

double real_field(const json& obj, const char* name, std::size_t line, bool non_negative) {
  const json& v = field_of(obj, name, line);
  if (!v.is_number()) throw DatasetLoadError(line, name, "not a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw DatasetLoadError(line, name, "not finite");
  if (non_negative && x < 0.0) throw DatasetLoadError(line, name, "negative value");
  return x;
}

std::vector<double> real_array(const json& obj, const char* name, std::size_t line,
                               bool non_negative) {
  const json& v = field_of(obj, name, line);
  if (!v.is_array()) throw DatasetLoadError(line, name, "not an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& e : v) {
    if (!e.is_number()) throw DatasetLoadError(line, name, "non-numeric element");
    const double x = e.get<double>();
    if (!std::isfinite(x)) throw DatasetLoadError(line, name, "non-finite element");
    if (non_negative && x < 0.0) throw DatasetLoadError(line, name, "negative value");
    out.push_back(x);
  }
  return out;
}

std::vector<int> count_array(const json& obj, const char* name, std::size_t line) {
  const json& v = field_of(obj, name, line);
  if (!v.is_array()) throw DatasetLoadError(line, name, "not an array");
  std::vector<int> out;
  out.reserve(v.size());
  for (const json& e : v) {
    if (!e.is_number_integer()) throw DatasetLoadError(line, name, "non-integer element");
    const auto x = e.get<std::int64_t>();
    if (x < 0) throw DatasetLoadError(line, name, "negative value");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

}  // namespace

OfflineDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path.string());

  OfflineDataset ds;
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  double header_y_max = 0.0;
  std::size_t expected_count = 0;

  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw DatasetLoadError(line_no, "<record>", e.what());
    }
    if (!obj.is_object()) throw DatasetLoadError(line_no, "<record>", "not a JSON object");

    if (!have_header) {
      const json& version = field_of(obj, "schema_version", line_no);
      if (!version.is_number_integer() || version.get<int>() != 1) {
        throw DatasetLoadError(line_no, "schema_version", "unsupported schema version");
      }
      const json& seed = field_of(obj, "seed", line_no);
      if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
        throw DatasetLoadError(line_no, "seed", "not an integer");
      }
      ds.meta.seed = seed.get<std::uint64_t>();
      const json& digest = field_of(obj, "config_digest", line_no);
      if (!digest.is_string()) throw DatasetLoadError(line_no, "config_digest", "not a string");
      ds.meta.config_digest = digest.get<std::string>();
      const json& horizon = field_of(obj, "T", line_no);
      if (!horizon.is_number_integer() || horizon.get<int>() < 1) {
        throw DatasetLoadError(line_no, "T", "horizon must be a positive integer");
      }
      ds.meta.horizon = horizon.get<int>();
      ds.meta.roi_cap = real_field(obj, "R_m", line_no, true);
      header_y_max = real_field(obj, "y_m", line_no, true);
      ds.roi_max_observed = real_field(obj, "r_m_empirical", line_no, true);
      const json& count = field_of(obj, "count", line_no);
      if (!count.is_number_integer()) throw DatasetLoadError(line_no, "count", "not an integer");
      expected_count = count.get<std::size_t>();
      have_header = true;
      continue;
    }

    Trajectory t;
    const json& pid = field_of(obj, "profile_id", line_no);
    if (!pid.is_number_integer()) throw DatasetLoadError(line_no, "profile_id", "not an integer");
    t.profile_id = pid.get<int>();
    t.feature = real_array(obj, "feature", line_no, false);
    t.budget = real_field(obj, "budget", line_no, true);
    t.costs = real_array(obj, "costs", line_no, true);
    t.actions = real_array(obj, "actions", line_no, true);
    t.rewards = real_array(obj, "rewards", line_no, true);
    t.buy_counts = count_array(obj, "buy_counts", line_no);
    t.quality = real_field(obj, "quality", line_no, true);

    const auto horizon = static_cast<std::size_t>(ds.meta.horizon);
    if (t.costs.size() != horizon) throw DatasetLoadError(line_no, "costs", "length != T");
    if (t.actions.size() != horizon) throw DatasetLoadError(line_no, "actions", "length != T");
    if (t.rewards.size() != horizon) throw DatasetLoadError(line_no, "rewards", "length != T");
    if (t.buy_counts.size() != horizon) {
      throw DatasetLoadError(line_no, "buy_counts", "length != T");
    }
    if (!ds.trajectories.empty() && t.feature.size() != ds.trajectories.front().feature.size()) {
      throw DatasetLoadError(line_no, "feature", "length differs from earlier records");
    }
    if (trajectory_quality(t) != t.quality) {
      throw DatasetLoadError(line_no, "quality", "does not equal the sum of rewards");
    }
    ds.trajectories.push_back(std::move(t));
  }
  if (!have_header) throw DatasetLoadError(1, "schema_version", "missing header record");
  if (ds.trajectories.size() != expected_count) {
    throw DatasetLoadError(1, "count", "header count does not match the number of records");
  }
  refresh_stats(ds);
  if (ds.y_max != header_y_max) {
    throw DatasetLoadError(1, "y_m", "header value does not match the stored qualities");
  }
  return ds;
}

std::vector<LabeledSample> sample_batch(const OfflineDataset& dataset, int n, Rng& rng) {
  if (n < 1) throw std::domain_error("sample_batch: n must be >= 1");
  if (dataset.empty()) throw std::domain_error("sample_batch: empty dataset");
  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Trajectory& t = dataset.trajectories[uniform_index(rng, dataset.size())];
    out.push_back({&t, t.quality});
  }
  return out;
}

std::vector<std::pair<Trajectory, Trajectory>> sample_pairs(const OfflineDataset& dataset, int n,
                                                            PairMode mode, Rng& rng,
                                                            double noise_scale) {
  if (n < 1) throw std::domain_error("sample_pairs: n must be >= 1");
  if (dataset.size() < 2) throw std::domain_error("sample_pairs: need at least two trajectories");
  std::vector<std::pair<Trajectory, Trajectory>> out;
  out.reserve(static_cast<std::size_t>(n));

  if (mode == PairMode::perturbed) {
    if (!(noise_scale >= 0.0)) throw std::domain_error("sample_pairs: negative noise scale");
    for (int i = 0; i < n; ++i) {
      const Trajectory& base = dataset.trajectories[uniform_index(rng, dataset.size())];
      Trajectory moved = base;
      const double unit = base.horizon() > 0 ? base.budget / base.horizon() : 0.0;
      for (double& c : moved.costs) {
        c = std::max(0.0, c + noise_scale * unit * uniform(rng, -1.0, 1.0));
      }
      out.emplace_back(base, std::move(moved));
    }
    return out;
  }

  std::vector<std::size_t> eligible;
  std::map<int, std::vector<std::size_t>> groups = dataset.by_profile();
  for (const auto& [id, members] : groups) {
    if (members.size() >= 2) eligible.insert(eligible.end(), members.begin(), members.end());
  }
  if (eligible.empty()) throw std::domain_error("sample_pairs: no profile has two trajectories");
  for (int i = 0; i < n; ++i) {
    const std::size_t first = eligible[uniform_index(rng, eligible.size())];
    const std::vector<std::size_t>& members = groups[dataset.trajectories[first].profile_id];
    std::size_t second = first;
    while (second == first) second = members[uniform_index(rng, members.size())];
    out.emplace_back(dataset.trajectories[first], dataset.trajectories[second]);
  }
  return out;
}

}  // namespace bidplan
