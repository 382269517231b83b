#pragma once

#include <iosfwd>
#include <string>

#include "bbeval/core.hpp"
#include "bbeval/dist.hpp"
#include "json.hpp"

namespace bbeval {

// Experiment layer behind the command-line tool. Each command reads one
// ExperimentConfig and writes CSV (JSON for the bundle-shaped outputs) to a
// stream. Everything is a pure function of the config, and every CSV row ends
// with the master seed and the config hash, so a result file alone identifies
// the run that produced it. Outputs are byte-identical for any worker count.

struct ExperimentConfig {
  std::string kind;          // which command the config is for
  uint64_t master_seed = 1;  // root of every RNG stream in the run
  uint64_t trials = 100000;  // Monte Carlo budget (where applicable)
  int workers = 0;           // OpenMP workers; 0 = library default
  nlohmann::json params = nlohmann::json::object();  // command-specific knobs

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);

  // FNV-1a over the canonical JSON dump (minus `workers`, which never affects
  // output), as fixed-width hex.
  std::string hash() const;
};

// Name-based lookups used by configs (throws ConfigError on unknown names).
//   algorithms:  constant(<c>) | majority-vote | knn(<k>) | empirical-mean |
//                seed-coin(<threshold>)
//   losses:      zero-one | thresholded(<radius>) | squared | absolute
//   comparisons: loss-difference(<loss>) | loss-order(<loss>)
AlgorithmHandle algorithm_by_name(const std::string& name);
LossFn loss_by_name(const std::string& name);
ComparisonFn comparison_by_name(const std::string& name);

// Distribution from config params: either params[key] as inline atoms JSON,
// or the default two-atom instance {(0,0): 3/4, (1,1): 1/4}.
FiniteDistribution dist_from_params(const nlohmann::json& params,
                                    const std::string& key = "dist");

// --- commands ---------------------------------------------------------------

// Power experiment for the exact evaluation test: per (m, tau, alpha, R) row,
// the exact rejection probability, a Monte Carlo protocol estimate (constant
// predictor on a Bernoulli(R) mistake distribution), and the power ceiling.
void cmd_power(const ExperimentConfig& cfg, std::ostream& out);

// Critical tables: (m, tau, alpha) -> (k_star, a_star), with rejection
// probability at each requested R (defaults to R = tau, where it equals
// alpha).
void cmd_critical(const ExperimentConfig& cfg, std::ostream& out);

// Size validation: exact rejection probability at R = tau (must equal alpha)
// plus an optional empirical size run.
void cmd_validate(const ExperimentConfig& cfg, std::ostream& out);

// Power-ceiling tables for the evaluation and comparison families.
void cmd_bound(const ExperimentConfig& cfg, std::ostream& out);

// Instability estimates for one algorithm on one distribution.
void cmd_stability(const ExperimentConfig& cfg, std::ostream& out);

// Regime scan: builtin algorithms x n grid x q grid, instability vs the
// 2B/n^(1/q) threshold.
void cmd_phase(const ExperimentConfig& cfg, std::ostream& out);

// Build an adversary bundle (family = eval | unbounded | compare), run the
// coupling demonstration, and emit both as JSON.
void cmd_adversary(const ExperimentConfig& cfg, std::ostream& out);

// Comparison test power: empirical rejection rate of the sign protocol vs
// the comparison ceiling.
void cmd_compare(const ExperimentConfig& cfg, std::ostream& out);

// Reduction identity check on randomly generated enumerable instances.
void cmd_reduce(const ExperimentConfig& cfg, std::ostream& out);

// Record mode (no input transcript): run the configured protocol once and
// write the transcript JSON. Verify mode: re-run and require byte-equal
// serialization (VerificationError on mismatch).
void cmd_replay(const ExperimentConfig& cfg, const nlohmann::json* recorded,
                std::ostream& out);

// Dispatch by cfg.kind (replay only in record mode). Unknown kind: ConfigError.
void run_experiment(const ExperimentConfig& cfg, std::ostream& out);

}  // namespace bbeval
