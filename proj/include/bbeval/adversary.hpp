#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bbeval/core.hpp"
#include "bbeval/dist.hpp"
#include "bbeval/estimate.hpp"
#include "bbeval/harness.hpp"
#include "json.hpp"

namespace bbeval {

// Constructions that certify the power ceilings are real: starting from an
// (algorithm, distribution) pair a test would like to certify, build a tilted
// pair that is (i) nearly indistinguishable from the original given N samples
// and (ii) on the wrong side of the threshold. Every bundle carries a
// verification record computed by the independent exact/MC oracles; a failed
// check raises VerificationError rather than returning a broken bundle.

// ---------------------------------------------------------------------------
// Verification records
// ---------------------------------------------------------------------------

struct VerificationCheck {
  std::string what;     // human-readable claim
  double lhs = 0.0;     // measured value
  double rhs = 0.0;     // target it is compared against
  double slack = 0.0;   // signed margin in the claim's favor
  bool pass = false;
  std::string method;   // "formula" | "exact-enum" | "mc(<trials>)"
};

struct VerificationRecord {
  std::vector<VerificationCheck> checks;

  bool all_pass() const;
  std::string summary() const;  // one line per check
  nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Bundles
// ---------------------------------------------------------------------------

struct AdversaryBundle {
  std::string kind;            // "eval" | "unbounded" | "compare"
  FiniteDistribution tilted;   // P'
  DataPoint rare_point;        // the fresh atom carrying the tilt
  double c = 0.0;              // mass on the rare atom (the mix weight)
  AlgorithmHandle patched;     // A' (first algorithm for "compare")
  std::optional<AlgorithmHandle> patched1;  // second algorithm ("compare")
  FittedModel f_star;          // model the patch switches to
  std::optional<FittedModel> f_star1;
  VerificationRecord verification;
  nlohmann::json params;       // all scalar inputs/derived values, for audit

  nlohmann::json to_json() const;  // closure-free audit form
};

// ---------------------------------------------------------------------------
// Construction pieces
// ---------------------------------------------------------------------------

// Mass to put on the rare point so that, once the patch triggers, the tilted
// risk clears the inflated threshold with an extra (1 - 1e-3) safety factor:
//   1 - c = (1 - eta) * ((risk_max - tilde) / (risk_max - risk))^(1/n).
// Throws ConfigError when risk >= tau or tilde >= risk_max (infeasible).
double choose_mixture_mass(double alpha, double tau, uint64_t N, size_t n,
                           double risk, double risk_max);

// Comparison variant, against the budget slack B*(1/alpha - 1)/N:
//   1 - c = (1 - eta) * ((delta_max - slack) / (delta_max + delta))^(1/n).
double choose_mixture_mass_compare(double alpha, double B, uint64_t N, size_t n,
                                   double delta, double delta_max);

// A' = "switch to f_star whenever the rare point is in the training data,
// defer to alg otherwise". Agrees with alg on every dataset avoiding the
// rare point.
AlgorithmHandle patch_algorithm(const AlgorithmHandle& alg,
                                const DataPoint& rare_point,
                                const FittedModel& f_star);

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

// Bounded-loss evaluation construction: P' = (1-c) P + c delta(rare),
// A' patched to the extremal-risk witness. Verifies (exact when enumerable,
// else MC with a 4-sigma margin) that the tilted risk reaches tau and that
// the patched instabilities stay within the regime threshold.
AdversaryBundle build_eval_adversary(const AlgorithmHandle& alg,
                                     const FiniteDistribution& dist,
                                     const LossFn& loss, double tau,
                                     double alpha, uint64_t N, size_t n,
                                     const TestProtocol& protocol,
                                     double epsilon, RngStream rng);

// Unbounded-loss construction (squared or absolute loss): mass delta/2 moves
// to a relabeled copy of the feature marginal at an extreme label y0 with
// loss(0, y0) >= C = tau / ((1 - (1 - delta/2)^n) * delta/2), and delta/2 to
// a fresh rare point that flips A' into the constant-0 predictor. The risk
// certificate C * (1 - (1 - delta/2)^n) * delta/2 >= tau is checked exactly,
// alongside exact enumeration when feasible.
AdversaryBundle build_unbounded_adversary(const AlgorithmHandle& alg,
                                          const FiniteDistribution& dist,
                                          const LossFn& loss, double tau,
                                          double delta, size_t n);

// Comparison construction: both patches swap roles (A0' adopts the extremal
// winner, A1' the loser), driving the tilted advantage to <= 0.
AdversaryBundle build_compare_adversary(const AlgorithmHandle& alg0,
                                        const AlgorithmHandle& alg1,
                                        const FiniteDistribution& dist,
                                        const ComparisonFn& psi, double alpha,
                                        uint64_t N, size_t n,
                                        const TestProtocol& protocol,
                                        double epsilon, RngStream rng);

// ---------------------------------------------------------------------------
// Coupling demonstration
// ---------------------------------------------------------------------------

// Draw (D, D') from the per-coordinate maximal coupling of (P, P'), run the
// protocol on both sides with SHARED protocol randomness, and check the
// transfer inequality  P(T(alg, D) = 1) <= (1-c)^(-N) P(T(A', D') = 1) + eps
// plus the coupling identity P(D = D') = (1 - TV)^N, both within 4 sigma.
struct CouplingReport {
  uint64_t trials = 0;
  double rate_original = 0.0, se_original = 0.0;
  double rate_tilted = 0.0, se_tilted = 0.0;
  double equal_rate = 0.0, se_equal = 0.0;
  double tv = 0.0;                  // TV(P, P')
  double expected_equal_rate = 0.0; // (1 - tv)^N
  double inflation = 0.0;           // (1 - c)^(-N)
  double epsilon = 0.0;
  double bound_rhs = 0.0;           // inflation * rate_tilted + epsilon
  double slack = 0.0;               // bound_rhs - rate_original
  double slack_sigma = 0.0;
  bool inequality_ok = false;
  bool equality_rate_ok = false;

  nlohmann::json to_json() const;
};

CouplingReport coupling_demo(const TestProtocol& protocol,
                             const AlgorithmHandle& alg,
                             const AdversaryBundle& bundle,
                             const FiniteDistribution& dist, size_t N,
                             uint64_t trials, RngStream rng, int workers = 0,
                             const AlgorithmHandle* alg1 = nullptr);

}  // namespace bbeval
