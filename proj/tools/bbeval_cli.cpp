#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bbeval/errors.hpp"
#include "bbeval/xcli.hpp"
#include "json.hpp"

// bbeval: exact evaluation/comparison tests for learning algorithms, their
// power ceilings, instability estimators, and the adversarial constructions
// that certify the ceilings. Every command is a pure function of its config:
// same config, same bytes out, regardless of --workers.

namespace {

using bbeval::ExperimentConfig;

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bbeval::ConfigError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw bbeval::ConfigError(path + ": " + e.what());
  }
  return j;
}

struct CommonFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<uint64_t> trials;
  std::optional<int> workers;
  std::string out_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON file)");
    cmd->add_option("--seed", seed, "master seed (overrides config)");
    cmd->add_option("--trials", trials, "Monte Carlo trials (overrides config)");
    cmd->add_option("--workers", workers,
                    "OpenMP workers; 0 = library default (overrides config)");
    cmd->add_option("--out", out_path, "output file (default: stdout)");
  }

  ExperimentConfig resolve(const std::string& kind) const {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = ExperimentConfig::from_json(load_json(config_path));
      if (cfg.kind != kind)
        throw bbeval::ConfigError("config kind '" + cfg.kind +
                                  "' does not match command '" + kind + "'");
    } else {
      cfg.kind = kind;
    }
    if (seed) cfg.master_seed = *seed;
    if (trials) cfg.trials = *trials;
    if (workers) cfg.workers = *workers;
    return cfg;
  }

  int run(const std::string& kind, const nlohmann::json* replay_input) const {
    ExperimentConfig cfg = resolve(kind);
    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path);
      if (!file) throw bbeval::ConfigError("cannot write " + out_path);
    }
    std::ostream& out = out_path.empty() ? std::cout : file;
    if (kind == "replay") {
      bbeval::cmd_replay(cfg, replay_input, out);
    } else {
      bbeval::run_experiment(cfg, out);
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"black-box algorithm-evaluation testbed"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds = {
      "power",  "critical",  "validate", "bound",  "stability",
      "phase",  "adversary", "compare",  "reduce", "replay"};
  const std::vector<std::string> blurbs = {
      "exact test power vs Monte Carlo and the power ceiling",
      "randomized critical pairs (k*, a*) and rejection curves",
      "size check: rejection at the threshold equals the level",
      "power-ceiling tables (evaluation and comparison families)",
      "leave-one-out instability of one algorithm",
      "instability regime scan across the builtin algorithms",
      "adversarial tilt construction + coupling demonstration",
      "comparison-test power vs the comparison ceiling",
      "comparison-to-evaluation reduction identity checks",
      "record a protocol transcript, or verify one with --in"};

  std::vector<CommonFlags> flags(kinds.size());
  std::string replay_in;
  for (size_t i = 0; i < kinds.size(); ++i) {
    CLI::App* cmd = app.add_subcommand(kinds[i], blurbs[i]);
    flags[i].attach(cmd);
    if (kinds[i] == "replay")
      cmd->add_option("--in", replay_in,
                      "recorded transcript JSON to verify against");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (size_t i = 0; i < kinds.size(); ++i) {
      if (!app.get_subcommand(kinds[i])->parsed()) continue;
      nlohmann::json recorded;
      const nlohmann::json* rec = nullptr;
      if (kinds[i] == "replay" && !replay_in.empty()) {
        recorded = load_json(replay_in);
        rec = &recorded;
      }
      return flags[i].run(kinds[i], rec);
    }
    return 1;  // unreachable: a subcommand is required
  } catch (const bbeval::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const bbeval::VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return 3;
  } catch (const bbeval::BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
