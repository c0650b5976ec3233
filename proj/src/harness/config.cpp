#include "bidplan/harness/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace bidplan {

std::vector<BehaviorPolicySpec> BehaviorSuite::specs() const {
  std::vector<BehaviorPolicySpec> out;
  for (BehaviorKind kind : kinds) {
    BehaviorPolicySpec s;
    s.kind = kind;
    s.grid_low = grid_low;
    s.grid_high = grid_high;
    s.grid_points = grid_points;
    if (kind == BehaviorKind::noisy_constant) s.noise_scale = noise_scale;
    if (kind == BehaviorKind::pid_pacing) {
      s.kp = pid_kp;
      s.ki = pid_ki;
      s.target_spend = pid_target;
      s.noise_scale = pid_noise;
    }
    out.push_back(s);
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw std::invalid_argument("config key '" + key + "': '" + value + "' is not " + what);
}

double parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') bad_value(key, v, "a number");
  return x;
}

long long parse_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  bad_value(key, v, "an integer");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "a boolean");
}

std::string real_str(double x) {
  char buf[40];
  const auto end = std::to_chars(buf, buf + sizeof buf, x).ptr;
  return std::string(buf, end);
}

struct Entry {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  bool in_digest = true;
};

template <typename Field>
Entry real_entry(std::string key, Field field) {
  return {key, [field](const ExperimentConfig& c) { return real_str(field(const_cast<ExperimentConfig&>(c))); },
          [field, key](ExperimentConfig& c, const std::string& v) { field(c) = parse_real(key, v); }};
}

template <typename Field>
Entry int_entry(std::string key, Field field) {
  return {key,
          [field](const ExperimentConfig& c) {
            return std::to_string(field(const_cast<ExperimentConfig&>(c)));
          },
          [field, key](ExperimentConfig& c, const std::string& v) {
            using T = std::remove_reference_t<decltype(field(c))>;
            field(c) = static_cast<T>(parse_integer(key, v));
          }};
}

template <typename Field>
Entry bool_entry(std::string key, Field field) {
  return {key,
          [field](const ExperimentConfig& c) {
            return std::string(field(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          },
          [field, key](ExperimentConfig& c, const std::string& v) { field(c) = parse_bool(key, v); }};
}

template <typename Field>
Entry ints_entry(std::string key, Field field) {
  return {key,
          [field](const ExperimentConfig& c) {
            std::string out;
            for (int x : field(const_cast<ExperimentConfig&>(c))) {
              out += (out.empty() ? "" : ",") + std::to_string(x);
            }
            return out;
          },
          [field, key](ExperimentConfig& c, const std::string& v) {
            std::vector<int> xs;
            for (const std::string& item : split_list(v)) {
              xs.push_back(static_cast<int>(parse_integer(key, item)));
            }
            field(c) = xs;
          }};
}

template <typename Field>
Entry activation_entry(std::string key, Field field) {
  return {key,
          [field](const ExperimentConfig& c) {
            return std::string(to_string(field(const_cast<ExperimentConfig&>(c))));
          },
          [field, key](ExperimentConfig& c, const std::string& v) {
            try {
              field(c) = activation_from_string(v);
            } catch (const std::invalid_argument&) {
              bad_value(key, v, "an activation (tanh, identity)");
            }
          }};
}

#define FIELD(expr) [](ExperimentConfig& c) -> auto& { return expr; }

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back(int_entry("env.horizon", FIELD(c.env.horizon)));
    e.push_back(real_entry("env.budget_min", FIELD(c.env.budget_min)));
    e.push_back(real_entry("env.budget_max", FIELD(c.env.budget_max)));
    e.push_back(int_entry("env.impressions_min", FIELD(c.env.impressions_min)));
    e.push_back(int_entry("env.impressions_max", FIELD(c.env.impressions_max)));
    e.push_back(real_entry("env.value_max", FIELD(c.env.value_max)));
    e.push_back(real_entry("env.price_max", FIELD(c.env.price_max)));
    e.push_back(real_entry("env.roi_cap", FIELD(c.env.roi_cap)));
    e.push_back(real_entry("env.value_scale_min", FIELD(c.env.value_scale_min)));
    e.push_back(real_entry("env.value_scale_max", FIELD(c.env.value_scale_max)));
    e.push_back(real_entry("env.price_log_mean_min", FIELD(c.env.price_log_mean_min)));
    e.push_back(real_entry("env.price_log_mean_max", FIELD(c.env.price_log_mean_max)));
    e.push_back(real_entry("env.price_log_sd", FIELD(c.env.price_log_sd)));
    e.push_back(real_entry("env.volume_spread", FIELD(c.env.volume_spread)));
    e.push_back(real_entry("env.market_headroom", FIELD(c.env.market_headroom)));

    e.push_back(int_entry("data.train_profiles", FIELD(c.train_profiles)));
    e.push_back(int_entry("data.eval_profiles", FIELD(c.eval_profiles)));
    e.push_back({"data.budget_levels",
                 [](const ExperimentConfig& c) {
                   std::string out;
                   for (double b : c.budget_levels) out += (out.empty() ? "" : ",") + real_str(b);
                   return out;
                 },
                 [](ExperimentConfig& c, const std::string& v) {
                   c.budget_levels.clear();
                   for (const std::string& item : split_list(v)) {
                     c.budget_levels.push_back(parse_real("data.budget_levels", item));
                   }
                 }});
    e.push_back(int_entry("data.episodes_per_pair", FIELD(c.episodes_per_pair)));
    e.push_back({"behavior.kinds",
                 [](const ExperimentConfig& c) {
                   std::string out;
                   for (BehaviorKind k : c.behavior.kinds) out += (out.empty() ? "" : ",") + std::string(to_string(k));
                   return out;
                 },
                 [](ExperimentConfig& c, const std::string& v) {
                   c.behavior.kinds.clear();
                   for (const std::string& item : split_list(v)) {
                     try {
                       c.behavior.kinds.push_back(behavior_kind_from_string(item));
                     } catch (const std::invalid_argument&) {
                       bad_value("behavior.kinds", item, "a behavior policy kind");
                     }
                   }
                 }});
    e.push_back(real_entry("behavior.grid_low", FIELD(c.behavior.grid_low)));
    e.push_back(real_entry("behavior.grid_high", FIELD(c.behavior.grid_high)));
    e.push_back(int_entry("behavior.grid_points", FIELD(c.behavior.grid_points)));
    e.push_back(real_entry("behavior.noise_scale", FIELD(c.behavior.noise_scale)));
    e.push_back(real_entry("behavior.pid_kp", FIELD(c.behavior.pid_kp)));
    e.push_back(real_entry("behavior.pid_ki", FIELD(c.behavior.pid_ki)));
    e.push_back(real_entry("behavior.pid_target", FIELD(c.behavior.pid_target)));
    e.push_back(real_entry("behavior.pid_noise", FIELD(c.behavior.pid_noise)));

    e.push_back(ints_entry("evaluator.hidden", FIELD(c.evaluator.hidden)));
    e.push_back(activation_entry("evaluator.activation", FIELD(c.evaluator.activation)));
    e.push_back(real_entry("evaluator.beta1", FIELD(c.evaluator.beta1)));
    e.push_back(int_entry("evaluator.steps", FIELD(c.evaluator.steps)));
    e.push_back(int_entry("evaluator.batch_size", FIELD(c.evaluator.batch_size)));
    e.push_back(int_entry("evaluator.pair_batch", FIELD(c.evaluator.pair_batch)));
    e.push_back(real_entry("evaluator.perturbed_fraction", FIELD(c.evaluator.perturbed_fraction)));
    e.push_back(real_entry("evaluator.perturb_scale", FIELD(c.evaluator.perturb_scale)));
    e.push_back(real_entry("evaluator.learning_rate", FIELD(c.evaluator.learning_rate)));
    e.push_back(real_entry("evaluator.lr_floor", FIELD(c.evaluator.lr_floor)));
    e.push_back(real_entry("evaluator.clip_norm", FIELD(c.evaluator.clip_norm)));
    e.push_back(int_entry("evaluator.lipschitz_pairs", FIELD(c.evaluator.lipschitz_pairs)));

    e.push_back(ints_entry("controller.hidden", FIELD(c.controller.hidden)));
    e.push_back(activation_entry("controller.activation", FIELD(c.controller.activation)));
    e.push_back(int_entry("controller.steps", FIELD(c.controller.steps)));
    e.push_back(int_entry("controller.batch_size", FIELD(c.controller.batch_size)));
    e.push_back(real_entry("controller.learning_rate", FIELD(c.controller.learning_rate)));
    e.push_back(real_entry("controller.lr_floor", FIELD(c.controller.lr_floor)));
    e.push_back(real_entry("controller.clip_norm", FIELD(c.controller.clip_norm)));
    e.push_back(real_entry("controller.holdout_fraction", FIELD(c.controller.holdout_fraction)));

    e.push_back({"planner.kind",
                 [](const ExperimentConfig& c) { return std::string(to_string(c.planner_net.kind)); },
                 [](ExperimentConfig& c, const std::string& v) {
                   try {
                     c.planner_net.kind = causal_kind_from_string(v);
                   } catch (const std::invalid_argument&) {
                     bad_value("planner.kind", v, "a causal context kind (window, attention)");
                   }
                 }});
    e.push_back(int_entry("planner.window", FIELD(c.planner_net.window)));
    e.push_back(int_entry("planner.width", FIELD(c.planner_net.width)));
    e.push_back(ints_entry("planner.hidden", FIELD(c.planner_net.hidden)));
    e.push_back(activation_entry("planner.activation", FIELD(c.planner_net.activation)));
    e.push_back(bool_entry("planner.use_cumulative", FIELD(c.planner_net.use_cumulative)));
    e.push_back(bool_entry("planner.use_time", FIELD(c.planner_net.use_time)));
    e.push_back(real_entry("planner.sigma", FIELD(c.sigma)));
    e.push_back(real_entry("planner.beta2", FIELD(c.planner.beta2)));
    e.push_back(real_entry("planner.beta3", FIELD(c.planner.beta3)));
    e.push_back({"planner.lp",
                 [](const ExperimentConfig& c) {
                   return c.lp_auto ? std::string("auto") : real_str(c.planner.lp);
                 },
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "auto") {
                     c.lp_auto = true;
                   } else {
                     c.lp_auto = false;
                     c.planner.lp = parse_real("planner.lp", v);
                   }
                 }});
    e.push_back(real_entry("planner.lp_factor", FIELD(c.lp_factor)));
    e.push_back(real_entry("planner.epsilon", FIELD(c.planner.epsilon)));
    e.push_back(real_entry("planner.score_weight", FIELD(c.planner.score_weight)));
    e.push_back(int_entry("planner.steps", FIELD(c.planner.steps)));
    e.push_back(int_entry("planner.n_rollouts", FIELD(c.planner.n_rollouts)));
    e.push_back(int_entry("planner.bc_batch", FIELD(c.planner.bc_batch)));
    e.push_back(int_entry("planner.penalty_pairs", FIELD(c.planner.penalty_pairs)));
    e.push_back(int_entry("planner.n_noise", FIELD(c.planner.n_noise)));
    e.push_back(real_entry("planner.baseline_decay", FIELD(c.planner.baseline_decay)));
    e.push_back(real_entry("planner.learning_rate", FIELD(c.planner.learning_rate)));
    e.push_back(real_entry("planner.lr_floor", FIELD(c.planner.lr_floor)));
    e.push_back(real_entry("planner.clip_norm", FIELD(c.planner.clip_norm)));
    e.push_back(int_entry("planner.validation_every", FIELD(c.planner.validation_every)));
    e.push_back(int_entry("planner.validation_rollouts", FIELD(c.planner.validation_rollouts)));
    e.push_back(int_entry("planner.pretrain_steps", FIELD(c.planner.pretrain_steps)));
    e.push_back(real_entry("planner.pretrain_learning_rate", FIELD(c.planner.pretrain_learning_rate)));

    e.push_back(int_entry("theory.bins", FIELD(c.lipschitz.bins)));
    e.push_back(int_entry("theory.n_sample", FIELD(c.lipschitz.n_sample)));
    e.push_back(int_entry("theory.planner_grid", FIELD(c.planner_grid)));
    e.push_back(int_entry("theory.planner_noise", FIELD(c.planner_noise)));
    e.push_back(int_entry("eval.episodes", FIELD(c.eval_episodes)));

    Entry seed = int_entry("run.seed", FIELD(c.seed));
    seed.in_digest = false;
    e.push_back(seed);
    e.push_back({"run.seeds",
                 [](const ExperimentConfig& c) {
                   std::string out;
                   for (std::uint64_t s : c.seeds) out += (out.empty() ? "" : ",") + std::to_string(s);
                   return out;
                 },
                 [](ExperimentConfig& c, const std::string& v) {
                   c.seeds.clear();
                   for (const std::string& item : split_list(v)) {
                     c.seeds.push_back(static_cast<std::uint64_t>(parse_integer("run.seeds", item)));
                   }
                 },
                 false});
    e.push_back({"run.out", [](const ExperimentConfig& c) { return c.out_dir.string(); },
                 [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }, false});
    return e;
  }();
  return entries;
}

#undef FIELD

const Entry& find_entry(const std::string& key) {
  for (const Entry& e : registry()) {
    if (e.key == key) return e;
  }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  env.horizon = 48;
  planner_net.horizon = env.horizon;
  planner_net.feature_dim = kFeatureDim;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  find_entry(key).set(*this, trim(value));
  planner_net.horizon = env.horizon;
  planner_net.feature_dim = kFeatureDim;
}

std::string ExperimentConfig::get(const std::string& key) const { return find_entry(key).get(*this); }

std::vector<std::string> ExperimentConfig::keys() const {
  std::vector<std::string> out;
  for (const Entry& e : registry()) out.push_back(e.key);
  return out;
}

std::map<std::string, std::string> ExperimentConfig::canonical() const {
  std::map<std::string, std::string> out;
  for (const Entry& e : registry()) {
    if (e.in_digest) out[e.key] = e.get(*this);
  }
  return out;
}

std::string ExperimentConfig::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [key, value] : canonical()) feed(key + "=" + value + "\n");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::validate() const {
  env.validate();
  if (train_profiles < 1 || eval_profiles < 0) {
    throw std::invalid_argument("config: need train_profiles >= 1 and eval_profiles >= 0");
  }
  for (double b : budget_levels) {
    if (b < env.budget_min || b > env.budget_max) {
      throw std::invalid_argument("config: budget level " + real_str(b) +
                                  " lies outside [env.budget_min, env.budget_max]");
    }
  }
  if (episodes_per_pair < 1) throw std::invalid_argument("config: episodes_per_pair must be >= 1");
  if (behavior.kinds.empty()) throw std::invalid_argument("config: behavior.kinds is empty");
  for (const BehaviorPolicySpec& s : behavior.specs()) s.validate();
  evaluator.validate();
  controller.validate();
  planner_net.validate();
  if (!(sigma > 0.0)) throw std::invalid_argument("config: planner.sigma must be positive");
  planner.validate();
  if (!(lp_factor > 0.0)) throw std::invalid_argument("config: planner.lp_factor must be positive");
  if (lipschitz.bins < 2 || lipschitz.n_sample < 1) {
    throw std::invalid_argument("config: theory.bins >= 2 and theory.n_sample >= 1 required");
  }
  if (eval_episodes < 1 || planner_grid < 1 || planner_noise < 1) {
    throw std::invalid_argument("config: eval.episodes, theory.planner_grid and "
                                "theory.planner_noise must be >= 1");
  }
  if (seeds.empty()) throw std::invalid_argument("config: run.seeds is empty");
}

void apply_config_text(ExperimentConfig& config, const std::string& text,
                       const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": malformed section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (!section.empty()) key = section + "." + key;
    try {
      config.set(key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig config;
  apply_config_text(config, buffer.str(), path.string());
  config.validate();
  return config;
}

}  // namespace bidplan
