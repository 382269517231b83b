#pragma once

#include "bbeval/core.hpp"
#include "bbeval/dist.hpp"
#include "bbeval/estimate.hpp"

namespace bbeval {

// Comparing two algorithms IS evaluating one synthetic algorithm: pair the
// fits into a single model that predicts both answers at once, and score the
// pair with the flipped-and-shifted comparison B - psi, which is an ordinary
// loss with values in [0, 2B]. Everything known about evaluation (risk
// identities, extremal values, instability) then transfers verbatim:
//   paired risk        = B - advantage,
//   paired extremal    = B + extremal advantage,
//   paired instability = pair instability.

struct PairedPrediction {
  double first = 0.0;   // algorithm 0's answer
  double second = 0.0;  // algorithm 1's answer
};

struct PairedModel {
  std::function<PairedPrediction(int64_t)> predict;
  std::string descriptor;

  PairedPrediction operator()(int64_t x) const { return predict(x); }
};

struct PairedAlgorithm {
  std::string name;
  std::function<PairedModel(const Dataset&, Seed)> fit;
};

// Fit both algorithms on the same data with the same seed; predict jointly.
PairedAlgorithm pair_algorithms(const AlgorithmHandle& alg0,
                                const AlgorithmHandle& alg1);

// The synthetic loss B - psi(first, second, y): nonnegative, bounded by 2B,
// and small exactly when algorithm 1 is far ahead.
class PairedLossFn {
 public:
  explicit PairedLossFn(const ComparisonFn& psi);

  double operator()(const PairedPrediction& pred, int64_t y) const;
  double bound() const { return 2.0 * psi_.bound(); }
  const ComparisonFn& comparison() const { return psi_; }

 private:
  ComparisonFn psi_;
};

PairedLossFn comparison_loss(const ComparisonFn& psi);

// Exact oracles for the synthetic evaluation problem (enumeration; same
// budget discipline as the estimate module).
Estimate paired_risk_exact(const PairedAlgorithm& alg, const PairedLossFn& loss,
                           const FiniteDistribution& dist, size_t n,
                           const SeedGrid& grid = SeedGrid::single(),
                           uint64_t budget = kEnumBudget);

StabilityEstimate paired_stability_exact(const PairedAlgorithm& alg,
                                         const PairedLossFn& loss,
                                         const FiniteDistribution& dist,
                                         size_t n, double q,
                                         const SeedGrid& grid = SeedGrid::single(),
                                         uint64_t budget = kEnumBudget);

// Extremal paired risk over pairs drawn from space x space.
double paired_max_risk(const FiniteDistribution& dist, const PairedLossFn& loss,
                       std::vector<double> space = {});

// The three transfer identities, each as |lhs - rhs| computed through two
// independent routes (paired machinery vs direct comparison machinery).
struct ReductionReport {
  double risk_identity_gap = 0.0;      // |paired risk - (B - delta)|
  double extremal_identity_gap = 0.0;  // |paired extremal - (B + delta_max)|
  double stability_identity_gap = 0.0; // |paired beta - pair beta|
  double paired_risk = 0.0;
  double delta = 0.0;
  double paired_extremal = 0.0;
  double delta_max = 0.0;
  double paired_beta = 0.0;
  double pair_beta = 0.0;

  double max_gap() const;
};

ReductionReport reduction_identity_check(const AlgorithmHandle& alg0,
                                         const AlgorithmHandle& alg1,
                                         const ComparisonFn& psi,
                                         const FiniteDistribution& dist,
                                         size_t n, double q = 1.0,
                                         const SeedGrid& grid = SeedGrid::single(),
                                         uint64_t budget = kEnumBudget);

}  // namespace bbeval
