#pragma once

#include <cstdint>

namespace bbeval {

// Finite-sample ceilings on the power of ANY valid black-box test of
// algorithm performance, plus the stability/consistency side conditions under
// which they hold. All functions are pure formula evaluations; Monte Carlo
// never enters here.

// tau * (1 + (1/alpha - 1) / N): the threshold inflation a sample budget of N
// forces on a level-alpha test.
double inflated_threshold(double tau, double alpha, uint64_t N);

struct EvalBoundInputs {
  double alpha = 0.05;  // test level, in (0,1)
  double tau = 0.5;     // evaluation threshold
  uint64_t N = 0;       // total labeled points available
  uint64_t n = 0;       // training size of the target risk
  double risk = 0.0;    // true algorithm risk R at n (must be < tau for power)
  double risk_max = 1.0;  // extremal risk over the prediction space
};

// min{ alpha * (1 + (tilde - R)/(risk_max - tilde))^(N/n), 1 } with
// tilde = inflated_threshold(tau, alpha, N). Throws ConfigError when the
// proviso tilde < risk_max fails (no nontrivial ceiling exists there) or when
// risk > tilde (outside the regime the ceiling describes).
double eval_power_bound(const EvalBoundInputs& in);
bool eval_bound_in_domain(const EvalBoundInputs& in);

struct CompareBoundInputs {
  double alpha = 0.05;
  double B = 1.0;         // comparison bound, |psi| <= B
  uint64_t N = 0;
  uint64_t n = 0;
  double delta = 0.0;     // true comparison advantage (must be > 0 for power)
  double delta_max = 0.0; // extremal advantage over the prediction space
};

// min{ alpha * (1 + (delta + B*(1/alpha-1)/N) / (delta_max - B*(1/alpha-1)/N))^(N/n), 1 }.
// Throws ConfigError when delta_max <= B*(1/alpha-1)/N (proviso) or delta < 0.
double compare_power_bound(const CompareBoundInputs& in);
bool compare_bound_in_domain(const CompareBoundInputs& in);

// Deviation bounds between a fitted model's deployed risk and the algorithm's
// average risk, from instability: |gap| has mean <= 2n*beta1 and rms <=
// sqrt(n)*beta2 (deterministic algorithms).
struct RiskGapBounds {
  double mean_bound = 0.0;  // 2 n beta1
  double rms_bound = 0.0;   // sqrt(n) beta2
};

RiskGapBounds risk_gap_bounds(uint64_t n, double beta1, double beta2);

// Which side of the stability threshold an (algorithm, n) pair sits on:
// instability gamma_q >= 2B / n^(1/q) puts evaluation (4B for the
// pair-stability comparison variant) in the regime where no black-box test
// has nontrivial power; below it, consistent estimation is possible.
enum class Regime { Estimable, PowerLimited };

struct RegimeReport {
  Regime regime = Regime::Estimable;
  double threshold = 0.0;  // 2B / n^(1/q)  (or 4B / n^(1/q))
  double margin = 0.0;     // gamma_q / threshold; >= 1 means PowerLimited
};

RegimeReport regime_classify(double gamma_q, double q, uint64_t n, double B,
                             bool pair_variant = false);

}  // namespace bbeval
