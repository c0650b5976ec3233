// Command-line front end. Settings are layered: built-in defaults, then the
// --config file, then --set KEY=VALUE pairs, then the dedicated flags.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bidplan/harness/config.hpp"
#include "bidplan/harness/pipeline.hpp"
#include "bidplan/training.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> beta1, beta2, beta3, epsilon, score_weight;
  std::string lp;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Experiment config file (key = value lines)");
  cmd->add_option("--seed", o.seed, "Experiment seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--beta1", o.beta1, "Evaluator Lipschitz penalty weight");
  cmd->add_option("--beta2", o.beta2, "Planner behavior-cloning weight (0 drops the KL term)");
  cmd->add_option("--beta3", o.beta3, "Planner Lipschitz penalty weight (0 drops the term)");
  cmd->add_option("--lp", o.lp, "Planner Lipschitz target: auto or a value");
  cmd->add_option("--epsilon", o.epsilon, "Condition margin, y* = (1 + epsilon) * y_m");
  cmd->add_option("--score-weight", o.score_weight, "Weight of the evaluator score (0 = BC only)");
  cmd->add_option("--set", o.sets, "Any config key, as KEY=VALUE (repeatable)");
}

bidplan::ExperimentConfig resolve(const Overrides& o) {
  bidplan::ExperimentConfig c =
      o.config_path.empty() ? bidplan::ExperimentConfig{} : bidplan::load_config(o.config_path);
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects KEY=VALUE, got " + kv);
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) {
    c.seed = *o.seed;
    c.seeds = {*o.seed};
  }
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.beta1) c.evaluator.beta1 = *o.beta1;
  if (o.beta2) c.planner.beta2 = *o.beta2;
  if (o.beta3) c.planner.beta3 = *o.beta3;
  if (o.epsilon) c.planner.epsilon = *o.epsilon;
  if (o.score_weight) c.planner.score_weight = *o.score_weight;
  if (!o.lp.empty()) c.set("planner.lp", o.lp);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline generative auto-bidding: simulator, planner training and evaluation"};
  app.require_subcommand(1);
  Overrides o;
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const bidplan::ExperimentConfig&, const bidplan::ProgressFn&);
  };
  const std::vector<Command> commands{
      {"gen-data", "Generate and save the offline dataset",
       [](const bidplan::ExperimentConfig& c, const bidplan::ProgressFn& p) { bidplan::cmd_gen_data(c, p); }},
      {"train", "Train evaluator, controller and planner", bidplan::cmd_train},
      {"eval", "Evaluate the fine-tuned planner against the behavior-cloned one", bidplan::cmd_eval},
      {"lipschitz-check", "Estimate evaluator and planner Lipschitz constants",
       bidplan::cmd_lipschitz_check},
      {"ablate", "Run full / no_kl / no_lip / bc_only over the configured seeds", bidplan::cmd_ablate},
      {"show-config", "Print the resolved configuration and its digest",
       [](const bidplan::ExperimentConfig& c, const bidplan::ProgressFn&) {
         for (const auto& [k, v] : c.canonical()) std::cout << k << " = " << v << "\n";
         std::cout << "# out = " << c.out_dir.string() << "\n# digest = " << c.digest() << "\n";
       }},
  };
  std::vector<CLI::App*> subs;
  for (const Command& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub, o);
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  const auto start = std::chrono::steady_clock::now();
  bidplan::ProgressFn progress = [&](const std::string& line) {
    if (quiet) return;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "[%7.1fs] %s\n", secs, line.c_str());
  };
  try {
    const bidplan::ExperimentConfig config = resolve(o);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) commands[i].run(config, progress);
    }
  } catch (const bidplan::TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << " (pipeline halted; earlier artifacts kept)\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
